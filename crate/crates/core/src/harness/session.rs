use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::config::Config;
use crate::curve::{FiberProductCurve, C64};
use crate::divisor::{enumerate_admissible, BetaVector};
use crate::error::{Error, Result};
use crate::surface::homology::choose_base_point;
use crate::surface::jacobian::{
    fiber_sum, infinity_sum, normalized, reduce, riemann_constant, riemann_constant_near, JacobianPoint, RiemannConstant,
};
use crate::surface::periods::{compute_periods, PeriodData, PeriodOptions};
use crate::theta::{Characteristic, ThetaContext};

/// Stream used for every Riemann constant search, so that all checks see the
/// same constant.
const RIEMANN_STREAM: u64 = 0x5249_454d;

/// Entries within this distance of a half-integer are snapped.
pub const SNAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub tol_scale: f64,
    pub fd_step: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { tol_scale: 1.0, fd_step: None, seed: None }
    }
}

/// Periods, Riemann constant and theta context of one curve.
#[derive(Debug, Clone)]
pub struct Setup {
    pub curve: FiberProductCurve,
    pub periods: Arc<PeriodData>,
    pub riemann: RiemannConstant,
    pub ctx: ThetaContext,
    fibers: Vec<Vec<C64>>,
    infinity: Vec<C64>,
}

impl Setup {
    fn build(curve: FiberProductCurve, periods: Arc<PeriodData>, riemann: RiemannConstant, theta_eps: f64) -> Result<Self> {
        let ctx = ThetaContext::new(&periods.tau, theta_eps)?;
        let fibers = (0..curve.branch_count()).map(|k| fiber_sum(&curve, &periods, k)).collect();
        let infinity = infinity_sum(&curve, &periods)?;
        Ok(Setup { curve, periods, riemann, ctx, fibers, infinity })
    }

    /// `e_beta`, lattice-reduced.
    pub fn e_point(&self, beta: &BetaVector) -> Result<JacobianPoint> {
        beta.check_shape(&self.curve)?;
        let mut w = self.infinity.iter().map(|v| -v).collect::<Vec<C64>>();
        for (k, b) in beta.flat().into_iter().enumerate() {
            if b == 1 {
                for (o, v) in w.iter_mut().zip(&self.fibers[k]) {
                    *o += v;
                }
            }
        }
        let u = normalized(&self.periods, &w);
        Ok(reduce(&self.periods, &u.add(&self.riemann.value).value))
    }

    /// Characteristic of `e_beta` in `[0, 1)`, snapped to half-integers when close.
    pub fn characteristic(&self, beta: &BetaVector) -> Result<Characteristic> {
        let e = self.e_point(beta)?;
        Ok(self.ctx.characteristic_of(&e.value).reduced().snap_half(SNAP_TOL).reduced())
    }

    pub fn theta_constant(&self, ch: &Characteristic) -> Result<C64> {
        Ok(self.ctx.eval_char(ch, &vec![C64::new(0.0, 0.0); self.ctx.genus()], 0)?.value)
    }

    pub fn fingerprint(&self) -> &str {
        &self.periods.homology.fingerprint
    }
}

#[derive(Debug, Default)]
pub struct PeriodsCache {
    inner: Mutex<BTreeMap<String, Arc<PeriodData>>>,
}

impl PeriodsCache {
    pub fn key(curve: &FiberProductCurve, x0: C64, opts: &PeriodOptions) -> String {
        let mut h = Sha256::new();
        for l in curve.lambdas() {
            h.update(l.re.to_le_bytes());
            h.update(l.im.to_le_bytes());
        }
        h.update(x0.re.to_le_bytes());
        h.update(x0.im.to_le_bytes());
        h.update(opts.rel_tol.to_le_bytes());
        hex::encode(h.finalize())
    }

    pub fn get_or_compute(&self, curve: &FiberProductCurve, x0: C64, opts: &PeriodOptions) -> Result<Arc<PeriodData>> {
        let key = Self::key(curve, x0, opts);
        if let Some(p) = self.inner.lock().map_err(|_| Error::Config("periods cache poisoned".into()))?.get(&key) {
            return Ok(p.clone());
        }
        let p = Arc::new(compute_periods(curve, x0, opts)?);
        self.inner.lock().map_err(|_| Error::Config("periods cache poisoned".into()))?.insert(key, p.clone());
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.inner.lock().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub struct Session {
    pub config: Config,
    pub curve: FiberProductCurve,
    pub x0: C64,
    pub opts: PeriodOptions,
    pub base: Setup,
    pub cache: PeriodsCache,
    pub tol_scale: f64,
    pub fd_step: f64,
    pub seed: u64,
    pub beta: Option<BetaVector>,
}

impl Session {
    pub fn new(config: Config, run: RunOptions) -> Result<Self> {
        config.validate_tolerances()?;
        if !(run.tol_scale.is_finite() && run.tol_scale > 0.0) {
            return Err(Error::Config("tolerance scale must be positive".into()));
        }
        let curve = config.curve()?;
        let beta = config.beta(&curve)?;
        let x0 = config.base_point().unwrap_or_else(|| choose_base_point(&curve));
        let opts = PeriodOptions { rel_tol: config.tolerances.integration, ..Default::default() };
        let cache = PeriodsCache::default();
        let seed = run.seed.unwrap_or(config.seed);
        let periods = cache.get_or_compute(&curve, x0, &opts)?;
        let mut rng = stream_rng(seed, RIEMANN_STREAM);
        let riemann = riemann_constant(&curve, &periods, &mut rng)?;
        let base = Setup::build(curve.clone(), periods, riemann, config.tolerances.theta)?;
        let fd_step = run.fd_step.unwrap_or(config.tolerances.fd_step);
        if !(fd_step.is_finite() && fd_step > 0.0) {
            return Err(Error::Config("finite-difference step must be positive".into()));
        }
        Ok(Session { config, curve, x0, opts, base, cache, tol_scale: run.tol_scale, fd_step, seed, beta })
    }

    /// Setup of a deformed curve at the same base point.
    pub fn setup_for(&self, curve: &FiberProductCurve) -> Result<Setup> {
        let periods = self.cache.get_or_compute(curve, self.x0, &self.opts)?;
        let mut rng = stream_rng(self.seed, RIEMANN_STREAM);
        let riemann = riemann_constant_near(curve, &periods, &self.base.riemann, &mut rng)?;
        Setup::build(curve.clone(), periods, riemann, self.config.tolerances.theta)
    }

    /// Setups at `lambda_k +/- h`, required to share the homology construction.
    pub fn perturbed_pair(&self, k: usize, h: f64) -> Result<(Setup, Setup)> {
        let l = self.curve.lambda(k);
        let plus = self.setup_for(&self.curve.with_branch_point(k, l + h)?)?;
        let minus = self.setup_for(&self.curve.with_branch_point(k, l - h)?)?;
        if plus.fingerprint() != minus.fingerprint() || plus.fingerprint() != self.base.fingerprint() {
            return Err(Error::BasisJump(format!("homology changed under a {h:e} move of branch point {k}")));
        }
        Ok((plus, minus))
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        stream_rng(self.seed, stream)
    }

    pub fn tol(&self, t: f64) -> f64 {
        t * self.tol_scale
    }

    pub fn default_beta(&self) -> BetaVector {
        self.beta.clone().unwrap_or_else(|| {
            enumerate_admissible(&self.curve).next().unwrap_or_else(|| BetaVector::zeros(self.curve.n(), self.curve.m()))
        })
    }

    pub fn instance(&self) -> String {
        format!("n={} m={} g={}", self.curve.n(), self.curve.m(), self.curve.genus())
    }
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
