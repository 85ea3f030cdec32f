use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::config::{
    ExactConfig, ExperimentConfig, InitSpec, Method, ModeKind, Model, ObservableRequest, SweepAxis, SweepConfig,
};
use super::report::{ErrorReport, ReplicateRecord, SeriesResult};
use crate::cmcs::{build_ensemble, cmcs_estimate, ConcentratedEnsemble};
use crate::error::{Error, Result};
use crate::exact::{
    dense_spectrum, exact_expectation, lanczos_ground, snapshot, GroundOracle, GroundState, ThermalOracle,
    ThermalSpectrum, WeightOracle,
};
use crate::hamiltonian::{BlbqParams, TimParams};
use crate::lattice::{ChainSpace, Configuration, LocalRegion};
use crate::mcmc::{metropolis_run, plain_estimate, ChainSettings, InitPolicy};
use crate::observable::{observable_factory, ObservableKind, ObservableSpec};
use crate::operator::Operator;
use crate::scalar::Scalar;

/// One value of the swept (or fixed) parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub param: String,
    pub value: f64,
}

/// Ground truth and exact observable values at one grid point.
pub struct PointTruth<T> {
    pub point: usize,
    oracle: Box<dyn WeightOracle<T>>,
    /// Exact value per planned observable, in plan order.
    pub exact: Vec<T>,
}

impl<T: Scalar> PointTruth<T> {
    pub fn oracle(&self) -> &dyn WeightOracle<T> {
        self.oracle.as_ref()
    }
}

/// An observable together with the diagonal or off-diagonal operators it is built from.
struct PlannedObservable<T> {
    request: ObservableRequest,
    region: LocalRegion,
    parts: Vec<ObservableSpec<T>>,
}

impl<T: Scalar> PlannedObservable<T> {
    fn combine(&self, v: &[T]) -> T {
        match self.request {
            ObservableRequest::Connected(..) => v[0] - v[1] * v[2],
            _ => v[0],
        }
    }

    fn in_region(&self) -> bool {
        self.request.sites().iter().all(|&s| self.region.contains(s))
    }
}

/// A validated experiment, ready to run.
pub struct ExperimentPlan<T> {
    model: Model,
    mode: ModeKind,
    space: ChainSpace,
    points: Vec<GridPoint>,
    observables: Vec<PlannedObservable<T>>,
    methods: Vec<(Method, Vec<usize>)>,
    replicates: usize,
    master_seed: u64,
    workers: usize,
    burn_in: usize,
    thin: usize,
    init: InitPolicy,
    exact: ExactConfig,
    spectrum: Mutex<Option<Arc<ThermalSpectrum<T>>>>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn z_kind(d: usize, i: usize) -> ObservableKind {
    if d == 2 {
        ObservableKind::SigmaZ(i)
    } else {
        ObservableKind::Spin1Sz(i)
    }
}

fn zz_kind(d: usize, i: usize, j: usize) -> ObservableKind {
    if d == 2 {
        ObservableKind::SigmaZZ(i, j)
    } else {
        ObservableKind::Spin1SzSz(i, j)
    }
}

/// Region of `len` sites centered on the span of `sites`, clamped to the chain.
pub fn centered_region(space: &ChainSpace, sites: &[usize], len: usize) -> Result<LocalRegion> {
    let lo = *sites.iter().min().expect("observable has sites");
    let hi = *sites.iter().max().expect("observable has sites");
    let span = hi - lo + 1;
    let start = lo.saturating_sub(len.saturating_sub(span) / 2);
    let start = start.min(space.len().saturating_sub(len));
    LocalRegion::new(space, start, len)
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn model_operator<T: Scalar>(model: &Model) -> Result<Box<dyn Operator<T>>> {
    Ok(match *model {
        Model::Tim { len, j, h_x, h_z } => Box::new(TimParams::new(len, T::of(j), T::of(h_x), T::of(h_z))?),
        Model::Blbq { len, j, theta } => Box::new(BlbqParams::new(len, T::of(j), T::of(theta))?),
    })
}

fn model_tag(model: &Model) -> String {
    match *model {
        Model::Tim { len, j, h_x, h_z } => format!(
            "tim_L{len}_{:016x}_{:016x}_{:016x}",
            j.to_bits(),
            h_x.to_bits(),
            h_z.to_bits()
        ),
        Model::Blbq { len, j, theta } => format!("blbq_L{len}_{:016x}_{:016x}", j.to_bits(), theta.to_bits()),
    }
}

impl<T: Scalar> ExperimentPlan<T> {
    /// Validates `cfg`. With a sweep, the axis fixes the mode: `h_x` runs
    /// ground-state points, `beta` runs thermal points.
    pub fn new(cfg: &ExperimentConfig, sweep: Option<&SweepConfig>) -> Result<Self> {
        let model = cfg.model.resolve()?;
        let op = model_operator::<T>(&model)?;
        let space = op.space().clone();
        let d = space.local_dim();
        let len = space.len();

        let mode = match sweep.map(|s| s.axis) {
            Some(SweepAxis::HX) => ModeKind::Ground,
            Some(SweepAxis::Beta) => ModeKind::Thermal,
            None => cfg.mode.kind,
        };
        let check_beta = |b: f64| {
            if b.is_finite() && b >= 0.0 {
                Ok(())
            } else {
                Err(Error::OutOfRange(format!("inverse temperature must be finite and >= 0, got {b}")))
            }
        };
        let points: Vec<GridPoint> = match (sweep, mode) {
            (Some(s), _) if s.values.is_empty() => return Err(config_err("sweep grid is empty")),
            (Some(s), ModeKind::Ground) => {
                if !matches!(model, Model::Tim { .. }) {
                    return Err(config_err("an h_x sweep needs the tilted Ising model"));
                }
                if let Some(bad) = s.values.iter().find(|v| !v.is_finite()) {
                    return Err(Error::SingularParameter(format!("h_x must be finite, got {bad}")));
                }
                s.values.iter().map(|&v| GridPoint { param: "h_x".into(), value: v }).collect()
            }
            (Some(s), ModeKind::Thermal) => {
                s.values.iter().try_for_each(|&b| check_beta(b))?;
                s.values.iter().map(|&v| GridPoint { param: "beta".into(), value: v }).collect()
            }
            (None, ModeKind::Ground) => vec![match model {
                Model::Tim { h_x, .. } => GridPoint { param: "h_x".into(), value: h_x },
                Model::Blbq { theta, .. } => GridPoint { param: "theta".into(), value: theta },
            }],
            (None, ModeKind::Thermal) => {
                if cfg.mode.betas.is_empty() {
                    return Err(config_err("thermal mode needs at least one value in mode.betas"));
                }
                cfg.mode.betas.iter().try_for_each(|&b| check_beta(b))?;
                cfg.mode.betas.iter().map(|&v| GridPoint { param: "beta".into(), value: v }).collect()
            }
        };

        let run = &cfg.experiment;
        if run.replicates == 0 {
            return Err(Error::OutOfRange("replicates must be at least 1".into()));
        }
        if run.workers == 0 {
            return Err(Error::OutOfRange("workers must be at least 1".into()));
        }
        if run.methods.is_empty() {
            return Err(config_err("experiment.methods is empty"));
        }
        let mut methods: Vec<(Method, Vec<usize>)> = Vec::new();
        for &m in &run.methods {
            if methods.iter().any(|(x, _)| *x == m) {
                return Err(config_err(format!("method {m} listed twice")));
            }
            let ns = run.samples_for(m).to_vec();
            if ns.is_empty() || ns.contains(&0) {
                return Err(Error::OutOfRange(format!("{m} sample counts must be a nonempty list of positive integers")));
            }
            methods.push((m, ns));
        }
        let uses_cmcs = methods.iter().any(|(m, _)| *m == Method::Cmcs);

        let region_cfg = &cfg.region;
        let fixed_region = match region_cfg.start {
            Some(0) => return Err(Error::OutOfRange("region.start is 1-based".into())),
            Some(s) => LocalRegion::new(&space, s - 1, region_cfg.length)?,
            None => {
                if region_cfg.length == 0 || region_cfg.length > len {
                    return Err(Error::OutOfRange(format!(
                        "region length {} outside 1..={len}",
                        region_cfg.length
                    )));
                }
                LocalRegion::new(&space, (len - region_cfg.length) / 2, region_cfg.length)?
            }
        };

        if run.observables.is_empty() {
            return Err(config_err("experiment.observables is empty"));
        }
        let mut observables = Vec::new();
        for text in &run.observables {
            let request: ObservableRequest = text.parse()?;
            let sites = request.sites();
            if let Some(&bad) = sites.iter().find(|&&s| s >= len) {
                return Err(Error::OutOfRange(format!("{request}: site {} outside 1..={len}", bad + 1)));
            }
            if sites.len() == 2 && sites[0] == sites[1] {
                return Err(config_err(format!("{request}: sites must differ")));
            }
            let kinds = match request {
                ObservableRequest::Sz(i) => vec![z_kind(d, i)],
                ObservableRequest::SzSz(i, j) => vec![zz_kind(d, i, j)],
                ObservableRequest::Sx(i) => {
                    if d != 2 {
                        return Err(Error::UnsupportedObservable(format!("{request} needs a spin-1/2 chain")));
                    }
                    if mode == ModeKind::Thermal {
                        return Err(Error::UnsupportedObservable(format!(
                            "{request} is off-diagonal; thermal mode measures diagonal observables only"
                        )));
                    }
                    vec![ObservableKind::SigmaX(i)]
                }
                ObservableRequest::Connected(i, j) => vec![zz_kind(d, i, j), z_kind(d, i), z_kind(d, j)],
            };
            let parts = kinds
                .into_iter()
                .map(|k| observable_factory(k, &space))
                .collect::<Result<Vec<_>>>()?;
            let region = if region_cfg.follow_observable {
                centered_region(&space, &sites, region_cfg.length)?
            } else {
                fixed_region
            };
            let planned = PlannedObservable { request, region, parts };
            if uses_cmcs && matches!(request, ObservableRequest::Sx(_)) && !planned.in_region() {
                return Err(Error::UnsupportedSupport(format!(
                    "{request} lies outside region [{}, {}] (1-based); set region.follow_observable",
                    planned.region.start() + 1,
                    planned.region.end()
                )));
            }
            observables.push(planned);
        }

        let init = match &cfg.sampler.init {
            None => InitPolicy::Random,
            Some(InitSpec::Named(s)) if s == "random" => InitPolicy::Random,
            Some(InitSpec::Named(s)) => return Err(config_err(format!("unknown sampler.init '{s}'"))),
            Some(InitSpec::Values(v)) => {
                let x = Configuration::new(v.clone());
                space.check(&x)?;
                InitPolicy::Given(x)
            }
        };
        let thin = cfg.sampler.thin.unwrap_or(len);
        if thin == 0 {
            return Err(Error::OutOfRange("sampler.thin must be at least 1".into()));
        }

        Ok(Self {
            model,
            mode,
            space,
            points,
            observables,
            methods,
            replicates: run.replicates,
            master_seed: run.seed,
            workers: run.workers,
            burn_in: cfg.sampler.burn_in,
            thin,
            init,
            exact: cfg.exact.clone(),
            spectrum: Mutex::new(None),
        })
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn observables(&self) -> Vec<ObservableRequest> {
        self.observables.iter().map(|o| o.request).collect()
    }

    /// 0-based local region used for the `k`-th observable.
    pub fn region(&self, k: usize) -> &LocalRegion {
        &self.observables[k].region
    }

    pub fn mode(&self) -> ModeKind {
        self.mode
    }

    pub fn space(&self) -> &ChainSpace {
        &self.space
    }

    /// Sample-size list per method, in configured order.
    pub fn methods(&self) -> &[(Method, Vec<usize>)] {
        &self.methods
    }

    /// Seed of replicate `r`: a per-series base derived from the master
    /// seed, plus the replicate index.
    pub fn replicate_seed(&self, point: usize, method: Method, ns_index: usize, r: usize) -> u64 {
        let series = ((point as u64) << 32) ^ (method.seed_tag() << 24) ^ ns_index as u64;
        splitmix64(self.master_seed ^ splitmix64(series)).wrapping_add(r as u64)
    }

    fn point_model(&self, point: usize) -> Model {
        match (self.model, self.points[point].param.as_str()) {
            (Model::Tim { len, j, h_z, .. }, "h_x") => Model::Tim {
                len,
                j,
                h_x: self.points[point].value,
                h_z,
            },
            (m, _) => m,
        }
    }

    fn snapshot_path(&self, kind: &str, model: &Model) -> Option<PathBuf> {
        self.exact.snapshot_dir.as_ref().map(|dir| {
            let tol = self.exact.lanczos_tol.to_bits();
            let name = match kind {
                "ground" => format!("ground_{}_{tol:016x}.snap", model_tag(model)),
                _ => format!("thermal_{}.snap", model_tag(model)),
            };
            dir.join(name)
        })
    }

    fn ground_state(&self, model: &Model) -> Result<GroundState<T>> {
        let path = self.snapshot_path("ground", model);
        if let Some(p) = path.as_ref().filter(|p| p.exists()) {
            let gs = snapshot::read_ground::<T>(p)?;
            if gs.space == self.space {
                log::info!("loaded ground state from {}", p.display());
                return Ok(gs);
            }
            log::warn!("snapshot {} does not match the chain; recomputing", p.display());
        }
        let op = model_operator::<T>(model)?;
        let gs = lanczos_ground(op.as_ref(), &self.exact.lanczos())?;
        log::info!(
            "ground state: E0 = {:e}, residual {:e}, {} matvecs",
            gs.energy,
            gs.residual,
            gs.matvecs
        );
        if let Some(p) = path {
            std::fs::create_dir_all(p.parent().expect("snapshot file has a directory"))?;
            snapshot::write_ground(&p, &gs)?;
        }
        Ok(gs)
    }

    fn thermal_spectrum(&self) -> Result<Arc<ThermalSpectrum<T>>> {
        let mut slot = self.spectrum.lock().expect("spectrum lock");
        if let Some(s) = slot.as_ref() {
            return Ok(s.clone());
        }
        let path = self.snapshot_path("thermal", &self.model);
        let mut loaded = None;
        if let Some(p) = path.as_ref().filter(|p| p.exists()) {
            let s = snapshot::read_spectrum::<T>(p)?;
            if s.space() == &self.space {
                log::info!("loaded spectrum from {}", p.display());
                loaded = Some(s);
            }
        }
        let spectrum = match loaded {
            Some(s) => s,
            None => {
                let op = model_operator::<T>(&self.model)?;
                let s = dense_spectrum(op.as_ref(), self.exact.dense_cap)?;
                log::info!("spectrum: {} blocks, E0 = {:e}", s.blocks().len(), s.ground_energy());
                if let Some(p) = path {
                    std::fs::create_dir_all(p.parent().expect("snapshot file has a directory"))?;
                    snapshot::write_spectrum(&p, &s)?;
                }
                s
            }
        };
        let spectrum = Arc::new(spectrum);
        *slot = Some(spectrum.clone());
        Ok(spectrum)
    }

    /// Builds (or loads) the ground truth for grid point `point`.
    pub fn prepare_point(&self, point: usize) -> Result<PointTruth<T>> {
        let oracle: Box<dyn WeightOracle<T>> = match self.mode {
            ModeKind::Ground => {
                let model = self.point_model(point);
                Box::new(GroundOracle::new(Arc::new(self.ground_state(&model)?)))
            }
            ModeKind::Thermal => Box::new(ThermalOracle::new(
                self.thermal_spectrum()?,
                T::of(self.points[point].value),
            )?),
        };
        let exact = self
            .observables
            .iter()
            .map(|o| {
                let v = o
                    .parts
                    .iter()
                    .map(|p| exact_expectation(p, oracle.as_ref()))
                    .collect::<Result<Vec<T>>>()?;
                Ok(o.combine(&v))
            })
            .collect::<Result<Vec<T>>>()?;
        Ok(PointTruth { point, oracle, exact })
    }

    fn chain_settings(&self, n_s: usize, seed: u64) -> ChainSettings {
        ChainSettings {
            samples: n_s,
            burn_in: self.burn_in,
            thin: self.thin,
            seed,
            init: self.init.clone(),
        }
    }

    /// Runs one replicate: a fresh chain of `n_s` retained samples and one
    /// estimate per planned observable. Fully determined by `seed`.
    pub fn run_replicate(
        &self,
        truth: &PointTruth<T>,
        method: Method,
        n_s: usize,
        seed: u64,
    ) -> Result<Vec<ReplicateRecord<T>>> {
        let oracle = truth.oracle();
        let chain = metropolis_run(oracle, &self.chain_settings(n_s, seed))?;
        let acceptance_rate = chain.acceptance_rate();
        let mut ensembles: Vec<ConcentratedEnsemble<T>> = Vec::new();
        let mut out = Vec::with_capacity(self.observables.len());
        for obs in &self.observables {
            let record = match method {
                Method::Mcmc => {
                    let v = obs
                        .parts
                        .iter()
                        .map(|p| plain_estimate(p, &chain, oracle))
                        .collect::<Result<Vec<T>>>()?;
                    ReplicateRecord {
                        seed,
                        estimate: obs.combine(&v),
                        n_e: None,
                        n_u: None,
                        acceptance_rate,
                        in_region: obs.in_region(),
                    }
                }
                Method::Cmcs => {
                    let pos = match ensembles.iter().position(|e| e.region() == &obs.region) {
                        Some(p) => p,
                        None => {
                            ensembles.push(build_ensemble(&chain, &obs.region, oracle)?);
                            ensembles.len() - 1
                        }
                    };
                    let ens = &ensembles[pos];
                    let v = obs
                        .parts
                        .iter()
                        .map(|p| cmcs_estimate(p, ens, oracle).map(|e| e.value))
                        .collect::<Result<Vec<T>>>()?;
                    ReplicateRecord {
                        seed,
                        estimate: obs.combine(&v),
                        n_e: Some(ens.environment_count()),
                        n_u: Some(ens.unique_count()),
                        acceptance_rate,
                        in_region: obs.in_region(),
                    }
                }
            };
            out.push(record);
        }
        Ok(out)
    }

    /// Runs every grid point, method, sample size and replicate. Output
    /// order is fixed by the plan, independent of scheduling.
    pub fn run(&self) -> Result<ErrorReport<T>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InternalConsistency(format!("thread pool: {e}")))?;
        pool.install(|| self.run_in_pool())
    }

    fn run_in_pool(&self) -> Result<ErrorReport<T>> {
        let truths = (0..self.points.len())
            .map(|p| self.prepare_point(p))
            .collect::<Result<Vec<_>>>()?;

        let mut jobs = Vec::new();
        for p in 0..self.points.len() {
            for &(method, ref ns_list) in &self.methods {
                for (ns_index, &n_s) in ns_list.iter().enumerate() {
                    for r in 0..self.replicates {
                        jobs.push((p, method, ns_index, n_s, r));
                    }
                }
            }
        }
        let results: Vec<Result<Vec<ReplicateRecord<T>>>> = jobs
            .par_iter()
            .map(|&(p, method, ns_index, n_s, r)| {
                let seed = self.replicate_seed(p, method, ns_index, r);
                self.run_replicate(&truths[p], method, n_s, seed)
            })
            .collect();
        let results = results.into_iter().collect::<Result<Vec<_>>>()?;

        let mut series = Vec::new();
        let mut chunks = results.chunks(self.replicates);
        for (p, truth) in truths.iter().enumerate() {
            let mut per_point = Vec::new();
            for &(method, ref ns_list) in &self.methods {
                for &n_s in ns_list {
                    let chunk = chunks.next().expect("one chunk per series");
                    for (k, obs) in self.observables.iter().enumerate() {
                        per_point.push(SeriesResult {
                            point: p,
                            param: self.points[p].param.clone(),
                            param_value: self.points[p].value,
                            observable: obs.request,
                            method,
                            n_s,
                            exact: truth.exact[k],
                            replicates: chunk.iter().map(|rec| rec[k].clone()).collect(),
                        });
                    }
                }
            }
            // observable-major within a point
            per_point.sort_by_key(|s| {
                self.observables
                    .iter()
                    .position(|o| o.request == s.observable)
                    .expect("planned observable")
            });
            series.extend(per_point);
        }
        Ok(ErrorReport { series })
    }
}

/// Runs the configured mode at its single parameter point (ground) or over
/// `mode.betas` (thermal). Any `[sweep]` section is ignored.
pub fn run_experiment<T: Scalar>(cfg: &ExperimentConfig) -> Result<ErrorReport<T>> {
    ExperimentPlan::<T>::new(cfg, None)?.run()
}

/// One report per grid value of `axis`.
pub fn sweep<T: Scalar>(cfg: &ExperimentConfig, axis: &SweepConfig) -> Result<Vec<ErrorReport<T>>> {
    Ok(ExperimentPlan::<T>::new(cfg, Some(axis))?.run()?.split_points())
}
