//! Explicit Runge–Kutta of order 8 with embedded 5th and 3rd order error
//! estimators (Dormand–Prince 8(5,3)), with the step-size controller of
//! Hairer, Nørsett and Wanner. No dense output: callers advance to each
//! requested time exactly.

use crate::error::{invalid, Error, Result};

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    /// Steps below this size are reported as an integration failure.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Options {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

impl Default for Options {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-12, h_max: f64::INFINITY, h_min: 1e-14, max_steps: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 0.526001519587677318785587544488e-01;
const C3: f64 = 0.789002279381515978178381316732e-01;
const C4: f64 = 0.118350341907227396726757197510e+00;
const C5: f64 = 0.281649658092772603273242802490e+00;
const C6: f64 = 0.333333333333333333333333333333e+00;
const C7: f64 = 0.25e+00;
const C8: f64 = 0.307692307692307692307692307692e+00;
const C9: f64 = 0.651282051282051282051282051282e+00;
const C10: f64 = 0.6e+00;
const C11: f64 = 0.857142857142857142857142857142e+00;

/// Lower-triangular stage coefficients, row `i` feeding stage `i + 1`.
const A: [&[f64]; 11] = [
    &[5.26001519587677318785587544488e-2],
    &[1.97250569845378994544595329183e-2, 5.91751709536136983633785987549e-2],
    &[2.95875854768068491816892993775e-2, 0.0, 8.87627564304205475450678981324e-2],
    &[2.41365134159266685502369798665e-1, 0.0, -8.84549479328286085344864962717e-1, 9.24834003261792003115737966543e-1],
    &[3.7037037037037037037037037037e-2, 0.0, 0.0, 1.70828608729473871279604482173e-1, 1.25467687566822425016691814123e-1],
    &[3.7109375e-2, 0.0, 0.0, 1.70252211019544039314978060272e-1, 6.02165389804559606850219397283e-2, -1.7578125e-2],
    &[
        3.70920001185047927108779319836e-2,
        0.0,
        0.0,
        1.70383925712239993810214054705e-1,
        1.07262030446373284651809199168e-1,
        -1.53194377486244017527936158236e-2,
        8.27378916381402288758473766002e-3,
    ],
    &[
        6.24110958716075717114429577812e-1,
        0.0,
        0.0,
        -3.36089262944694129406857109825e0,
        -8.68219346841726006818189891453e-1,
        2.75920996994467083049415600797e1,
        2.01540675504778934086186788979e1,
        -4.34898841810699588477366255144e1,
    ],
    &[
        4.77662536438264365890433908527e-1,
        0.0,
        0.0,
        -2.48811461997166764192642586468e0,
        -5.90290826836842996371446475743e-1,
        2.12300514481811942347288949897e1,
        1.52792336328824235832596922938e1,
        -3.32882109689848629194453265587e1,
        -2.03312017085086261358222928593e-2,
    ],
    &[
        -9.3714243008598732571704021658e-1,
        0.0,
        0.0,
        5.18637242884406370830023853209e0,
        1.09143734899672957818500254654e0,
        -8.14978701074692612513997267357e0,
        -1.85200656599969598641566180701e1,
        2.27394870993505042818970056734e1,
        2.49360555267965238987089396762e0,
        -3.0467644718982195003823669022e0,
    ],
    &[
        2.27331014751653820792359768449e0,
        0.0,
        0.0,
        -1.05344954667372501984066689879e1,
        -2.00087205822486249909675718444e0,
        -1.79589318631187989172765950534e1,
        2.79488845294199600508499808837e1,
        -2.85899827713502369474065508674e0,
        -8.87285693353062954433549289258e0,
        1.23605671757943030647266201528e1,
        6.43392746015763530355970484046e-1,
    ],
];

const C: [f64; 12] = [0.0, C2, C3, C4, C5, C6, C7, C8, C9, C10, C11, 1.0];

const B: [f64; 12] = [
    5.42937341165687622380535766363e-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.45031289275240888144113950566e0,
    1.89151789931450038304281599044e0,
    -5.8012039600105847814672114227e0,
    3.1116436695781989440891606237e-1,
    -1.52160949662516078556178806805e-1,
    2.01365400804030348374776537501e-1,
    4.47106157277725905176885569043e-2,
];

const BHH1: f64 = 0.244094488188976377952755905512e+00;
const BHH2: f64 = 0.733846688281611857341361741547e+00;
const BHH3: f64 = 0.220588235294117647058823529412e-01;

const ER: [f64; 12] = [
    0.1312004499419488073250102996e-01,
    0.0,
    0.0,
    0.0,
    0.0,
    -0.1225156446376204440720569753e+01,
    -0.4957589496572501915214079952e+00,
    0.1664377182454986536961530415e+01,
    -0.3503288487499736816886487290e+00,
    0.3341791187130174790297318841e+00,
    0.8192320648511571246570742613e-01,
    -0.2235530786388629525884427845e-01,
];

const SAFE: f64 = 0.9;
const FAC1: f64 = 0.333;
const FAC2: f64 = 6.0;

/// Stateful integrator that can be advanced through a sequence of times.
pub struct Dop853<'a, S: OdeSystem> {
    sys: &'a S,
    opts: Options,
    t: f64,
    y: Vec<f64>,
    h: f64,
    k: Vec<Vec<f64>>,
    ytmp: Vec<f64>,
    stats: Stats,
}

impl<'a, S: OdeSystem> Dop853<'a, S> {
    pub fn new(sys: &'a S, t0: f64, y0: &[f64], opts: Options) -> Result<Self> {
        let n = sys.dim();
        if y0.len() != n {
            return invalid(format!("state has length {}, system expects {n}", y0.len()));
        }
        if !(opts.rtol > 0.0 && opts.atol > 0.0) {
            return invalid("tolerances must be positive");
        }
        let mut s = Self {
            sys,
            opts,
            t: t0,
            y: y0.to_vec(),
            h: 0.0,
            k: vec![vec![0.0; n]; 12],
            ytmp: vec![0.0; n],
            stats: Stats::default(),
        };
        let mut f0 = vec![0.0; n];
        s.eval(t0, &s.y.clone(), &mut f0)?;
        s.k[0] = f0;
        s.h = s.initial_step()?;
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64] {
        &self.y
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        self.stats.evaluations += 1;
        self.sys.rhs(t, y, dy).map_err(|e| match e {
            Error::Core(unchained_core::Error::Collision(detail)) => Error::Collision { t, detail },
            other => other,
        })
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self) -> Result<f64> {
        let n = self.y.len();
        let (mut dnf, mut dny) = (0.0, 0.0);
        for i in 0..n {
            let sk = self.scale(self.y[i], 0.0);
            dnf += (self.k[0][i] / sk).powi(2);
            dny += (self.y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * (dny / dnf).sqrt() };
        h = h.min(self.opts.h_max);
        let y1: Vec<f64> = (0..n).map(|i| self.y[i] + h * self.k[0][i]).collect();
        let mut f1 = vec![0.0; n];
        self.eval(self.t + h, &y1, &mut f1)?;
        let mut der2 = 0.0;
        for i in 0..n {
            der2 += ((f1[i] - self.k[0][i]) / self.scale(self.y[i], 0.0)).powi(2);
        }
        let der12 = (der2.sqrt() / h).max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
        Ok((100.0 * h).min(h1).min(self.opts.h_max))
    }

    /// Advance exactly to `t_end ≥ t`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        if t_end < self.t {
            return invalid(format!("cannot integrate backwards from {} to {t_end}", self.t));
        }
        let n = self.y.len();
        let mut last_rejected = false;
        while self.t < t_end {
            if self.stats.accepted + self.stats.rejected >= self.opts.max_steps {
                return Err(Error::Integration { t: self.t, reason: "step budget exhausted".into() });
            }
            let remaining = t_end - self.t;
            let mut h = self.h.min(self.opts.h_max);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h < self.opts.h_min && !last {
                return Err(Error::Integration { t: self.t, reason: format!("step size underflow (h = {h:e})") });
            }
            for s in 1..12 {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, a) in A[s - 1].iter().enumerate() {
                        acc += a * self.k[j][i];
                    }
                    self.ytmp[i] = self.y[i] + h * acc;
                }
                let (t_s, y_s) = (self.t + C[s] * h, self.ytmp.clone());
                let mut ks = std::mem::take(&mut self.k[s]);
                let r = self.eval(t_s, &y_s, &mut ks);
                self.k[s] = ks;
                r?;
            }
            let mut y_new = vec![0.0; n];
            let (mut err, mut err2) = (0.0, 0.0);
            for i in 0..n {
                let mut inc = 0.0;
                let mut e5 = 0.0;
                for s in 0..12 {
                    inc += B[s] * self.k[s][i];
                    e5 += ER[s] * self.k[s][i];
                }
                y_new[i] = self.y[i] + h * inc;
                let sk = self.scale(self.y[i], y_new[i]);
                let e3 = inc - BHH1 * self.k[0][i] - BHH2 * self.k[8][i] - BHH3 * self.k[11][i];
                err2 += (e3 / sk).powi(2);
                err += (e5 / sk).powi(2);
            }
            let deno = if err + 0.01 * err2 > 0.0 { err + 0.01 * err2 } else { 1.0 };
            let err = h * err * (1.0 / (deno * n as f64)).sqrt();
            let fac11 = err.powf(1.0 / 8.0);
            let fac = (1.0 / FAC2).max((1.0 / FAC1).min(fac11 / SAFE));
            if err <= 1.0 {
                let mut f_new = vec![0.0; n];
                self.eval(self.t + h, &y_new, &mut f_new)?;
                self.stats.accepted += 1;
                self.t = if last { t_end } else { self.t + h };
                self.y = y_new;
                self.k[0] = f_new;
                let mut h_new = h / fac;
                if last_rejected {
                    h_new = h_new.min(h);
                }
                last_rejected = false;
                // A short final step says nothing about the natural step size.
                self.h = if last { self.h.max(h_new) } else { h_new };
            } else {
                self.stats.rejected += 1;
                last_rejected = true;
                let shrink = if err.is_finite() { (1.0 / FAC1).min(fac11 / SAFE) } else { 10.0 };
                self.h = h / shrink;
            }
        }
        Ok(())
    }
}

/// Integrate `y' = f(t, y)` from `t0` to `t1`.
pub fn integrate<S: OdeSystem>(sys: &S, t0: f64, y0: &[f64], t1: f64, opts: Options) -> Result<(Vec<f64>, Stats)> {
    let mut ig = Dop853::new(sys, t0, y0, opts)?;
    ig.advance_to(t1)?;
    Ok((ig.y, ig.stats))
}
