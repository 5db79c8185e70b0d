//! Dormand–Prince 5(4) integrator for small autonomous systems with dense
//! output and a sign-change event (negative to positive).

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Number of dense-output samples per step used to bracket events.
const EVENT_SAMPLES: usize = 8;

/// Adaptive step sizes are snapped down to the ladder 2^(k/4). The error
/// estimate carries only a few significant digits, so without snapping two
/// runs differing by rounding noise drift apart in step sequence.
fn snap_step(h: f64) -> f64 {
    let k = (4.0 * h.log2()).floor();
    (k / 4.0).exp2()
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let hc = h * c;
        for i in 0..N {
            out[i] += hc * k[i];
        }
    }
    out
}

/// One accepted (or replayed) step with its continuous extension.
#[derive(Debug, Clone)]
pub struct StepRecord<const N: usize> {
    pub t0: f64,
    pub h: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    rcont: [[f64; N]; 5],
}

impl<const N: usize> StepRecord<N> {
    /// Fourth-order continuous extension at `t0 + θh`, θ ∈ [0, 1].
    pub fn dense(&self, theta: f64) -> [f64; N] {
        let t1 = 1.0 - theta;
        let r = &self.rcont;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = r[0][i] + theta * (r[1][i] + t1 * (r[2][i] + theta * (r[3][i] + t1 * r[4][i])));
        }
        out
    }
}

struct Trial<const N: usize> {
    y1: [f64; N],
    k7: [f64; N],
    err: [f64; N],
    rcont: [[f64; N]; 5],
}

fn trial<const N: usize, F>(f: &F, y0: &[f64; N], k1: &[f64; N], h: f64) -> Trial<N>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let k2 = f(&axpy(y0, h, &[(A21, k1)]));
    let k3 = f(&axpy(y0, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(&axpy(y0, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(&axpy(y0, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(&axpy(
        y0,
        h,
        &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    ));
    let y1 = axpy(
        y0,
        h,
        &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
    );
    let k7 = f(&y1);
    let mut err = [0.0; N];
    let mut rcont = [[0.0; N]; 5];
    for i in 0..N {
        err[i] = h
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let ydiff = y1[i] - y0[i];
        let bspl = h * k1[i] - ydiff;
        rcont[0][i] = y0[i];
        rcont[1][i] = ydiff;
        rcont[2][i] = bspl;
        rcont[3][i] = ydiff - h * k7[i] - bspl;
        rcont[4][i] = h
            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Trial { y1, k7, err, rcont }
}

/// How step sizes are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum StepMode {
    /// Error-controlled steps starting from the given size.
    Adaptive { h0: f64 },
    /// Constant step, no error control.
    Fixed(f64),
    /// Replay these step sizes without error control, then continue
    /// adaptively from the last one.
    Replay(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct Dopri5<const N: usize> {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    /// Components taking part in the error norm.
    pub error_mask: [bool; N],
    pub mode: StepMode,
    pub max_steps: usize,
}

/// How an integration ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination<const N: usize> {
    /// The event function crossed from negative to positive.
    Event { t: f64, y: [f64; N] },
    /// The independent variable reached `t_max` without an event.
    Horizon { t: f64, y: [f64; N] },
    /// Step size collapsed or the step budget ran out.
    Failed { t: f64, y: [f64; N], reason: &'static str },
}

/// Result of a run: the termination and the sizes of all full accepted steps
/// (the truncated event step is reported by its untruncated size).
#[derive(Debug, Clone)]
pub struct Run<const N: usize> {
    pub termination: Termination<N>,
    pub steps: Vec<f64>,
}

impl<const N: usize> Dopri5<N> {
    pub fn new(rtol: f64, atol: f64, h_max: f64, mode: StepMode) -> Self {
        Self {
            rtol,
            atol,
            h_max,
            error_mask: [true; N],
            mode,
            max_steps: 2_000_000,
        }
    }

    pub fn with_error_mask(mut self, mask: [bool; N]) -> Self {
        self.error_mask = mask;
        self
    }

    fn error_norm(&self, y0: &[f64; N], t: &Trial<N>) -> f64 {
        let mut acc = 0.0;
        let mut m = 0;
        for i in 0..N {
            if self.error_mask[i] {
                let sc = self.atol + self.rtol * y0[i].abs().max(t.y1[i].abs());
                let r = t.err[i] / sc;
                acc += r * r;
                m += 1;
            }
        }
        if m == 0 {
            0.0
        } else {
            (acc / m as f64).sqrt()
        }
    }

    /// Integrate `y' = f(y)` from `y0` at `t = 0` until `event` turns
    /// positive after having been negative, or until `t_max`.
    ///
    /// `observer` sees every accepted step, including the final one truncated
    /// at the event.
    pub fn integrate<F, G, O>(
        &self,
        f: F,
        y0: [f64; N],
        t_max: f64,
        event: G,
        mut observer: O,
    ) -> Run<N>
    where
        F: Fn(&[f64; N]) -> [f64; N],
        G: Fn(&[f64; N]) -> f64,
        O: FnMut(&StepRecord<N>),
    {
        let mut t = 0.0;
        let mut y = y0;
        let mut k1 = f(&y);
        let mut armed = event(&y) < 0.0;
        let mut steps = Vec::new();
        let mut replay: &[f64] = &[];
        let (mut h, fixed) = match &self.mode {
            StepMode::Adaptive { h0 } => (h0.min(self.h_max), false),
            StepMode::Fixed(h) => (*h, true),
            StepMode::Replay(list) => {
                replay = list.as_slice();
                (list.first().copied().unwrap_or(self.h_max).min(self.h_max), false)
            }
        };
        let mut replay_idx = 0;
        let mut rejected_last = false;

        for _ in 0..self.max_steps {
            let replaying = replay_idx < replay.len();
            if replaying {
                h = replay[replay_idx];
            }
            let mut horizon = false;
            if t + h >= t_max {
                h = t_max - t;
                horizon = true;
            }
            if !(h > 1e-14 * (1.0 + t.abs())) {
                if horizon {
                    return Run {
                        termination: Termination::Horizon { t, y },
                        steps,
                    };
                }
                return Run {
                    termination: Termination::Failed {
                        t,
                        y,
                        reason: "step size underflow",
                    },
                    steps,
                };
            }
            let tr = trial(&f, &y, &k1, h);
            let err = self.error_norm(&y, &tr);
            let accept = fixed || replaying || err <= 1.0;
            if !accept {
                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                h = snap_step(h * fac);
                rejected_last = true;
                continue;
            }
            let rec = StepRecord {
                t0: t,
                h,
                y0: y,
                y1: tr.y1,
                rcont: tr.rcont,
            };

            // event bracket on the dense output
            let mut prev = (0.0, event(&y));
            let mut bracket = None;
            for k in 1..=EVENT_SAMPLES {
                let th = k as f64 / EVENT_SAMPLES as f64;
                let g = if k == EVENT_SAMPLES {
                    event(&tr.y1)
                } else {
                    event(&rec.dense(th))
                };
                if armed && g > 0.0 && prev.1 <= 0.0 {
                    bracket = Some((prev.0, th));
                    break;
                }
                if g < 0.0 {
                    armed = true;
                }
                prev = (th, g);
            }
            if let Some((lo, hi)) = bracket {
                let (delta, yev, last) = self.locate_event(&f, &event, &rec, &k1, lo, hi);
                observer(&last);
                steps.push(h);
                return Run {
                    termination: Termination::Event { t: t + delta, y: yev },
                    steps,
                };
            }

            observer(&rec);
            steps.push(h);
            t += h;
            y = tr.y1;
            k1 = tr.k7;
            if horizon {
                return Run {
                    termination: Termination::Horizon { t, y },
                    steps,
                };
            }
            if replaying {
                replay_idx += 1;
                continue;
            }
            if !fixed {
                let mut fac = if err > 0.0 {
                    0.9 * err.powf(-0.2)
                } else {
                    5.0
                };
                fac = fac.clamp(0.2, 5.0);
                if rejected_last {
                    fac = fac.min(1.0);
                }
                h = snap_step(h * fac).min(self.h_max);
            }
            rejected_last = false;
        }
        Run {
            termination: Termination::Failed {
                t,
                y,
                reason: "step budget exhausted",
            },
            steps,
        }
    }

    /// Bisect on the dense output, then polish the crossing with secant
    /// iterations over genuine RK steps of size δ from the step start.
    fn locate_event<F, G>(
        &self,
        f: &F,
        event: &G,
        rec: &StepRecord<N>,
        k1: &[f64; N],
        mut lo: f64,
        mut hi: f64,
    ) -> (f64, [f64; N], StepRecord<N>)
    where
        F: Fn(&[f64; N]) -> [f64; N],
        G: Fn(&[f64; N]) -> f64,
    {
        let h = rec.h;
        let tol = 1e-14 / h.max(1e-300);
        for _ in 0..200 {
            if hi - lo <= tol.max(1e-15) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if event(&rec.dense(mid)) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let step_to = |d: f64| trial(f, &rec.y0, k1, d);
        let mut d1 = hi * h;
        let mut t1 = step_to(d1);
        let mut g1 = event(&t1.y1);
        let mut d0 = lo * h;
        let mut g0 = if d0 > 0.0 {
            event(&step_to(d0).y1)
        } else {
            event(&rec.y0)
        };
        for _ in 0..30 {
            if g1.abs() < 1e-15 || (g1 - g0) == 0.0 {
                break;
            }
            let d2 = d1 - g1 * (d1 - d0) / (g1 - g0);
            if !(d2 > 0.0 && d2 <= h) || (d2 - d1).abs() < 1e-16 * h.max(1.0) {
                break;
            }
            d0 = d1;
            g0 = g1;
            d1 = d2;
            t1 = step_to(d1);
            g1 = event(&t1.y1);
        }
        let last = StepRecord {
            t0: rec.t0,
            h: d1,
            y0: rec.y0,
            y1: t1.y1,
            rcont: t1.rcont,
        };
        (d1, t1.y1, last)
    }
}
