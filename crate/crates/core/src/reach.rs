//! Cell-based reachability: per-cell reach kernels, the forward fixpoint,
//! backward unsafe-set computation and simulation oracles.
//!
//! Cell sets here have one extra slot past the last grid cell, the `out`
//! node, standing for "left the state space through an unsafe face". It is
//! absorbing and always part of the unsafe target.

use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dynamics::{taxi_linearized_step_within, taxi_monotonic_step, AffineDynamics, Plant};
use crate::error::{Error, Result};
use crate::geometry::{StarSet, StarUnion};
use crate::grid::{CellSet, Face, Grid};
use crate::interval::{Interval, IntervalBox};
use crate::network::Network;
use crate::propagation::{exact_star, ibp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Interval control bounds plus a monotonic or interval plant step;
    /// one period at a time.
    Baseline,
    /// Interval bounds over the network unrolled with affine dynamics.
    IbpComposed,
    /// Exact star analysis of the controller chained with the plant.
    StarComposed,
}

/// What leaving the state space through a face means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EgressPolicy {
    Unsafe,
    /// Treated as unsafe, and the cell is reported as unverifiable.
    Unverifiable,
    /// States beyond the face can never become unsafe and are dropped.
    Absorbing,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub plant: Plant,
    /// Closed-loop controller: `(state, latents) ↦ control`.
    pub network: Network,
    pub grid: Grid,
    pub latent_box: IntervalBox,
    pub unsafe_boxes: Vec<IntervalBox>,
    /// Policy per face, indexed `[dim][0 = lower, 1 = upper]`.
    pub egress: Vec<[EgressPolicy; 2]>,
    pub engine: Engine,
    pub m: usize,
    pub k_max: usize,
    pub split_cap: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let k = self.plant.state_dim();
        if self.grid.dim() != k {
            return Err(Error::Config(format!("grid has {} dimensions, plant state has {k}", self.grid.dim())));
        }
        if self.network.in_dim() != k + self.latent_box.dim() {
            return Err(Error::Config(format!(
                "network takes {} inputs but state + latents is {}",
                self.network.in_dim(),
                k + self.latent_box.dim()
            )));
        }
        if self.network.out_dim() != self.plant.control_dim() {
            return Err(Error::Config(format!(
                "network has {} outputs, plant takes {} controls (is the control map missing?)",
                self.network.out_dim(),
                self.plant.control_dim()
            )));
        }
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if self.engine == Engine::Baseline && self.m != 1 {
            return Err(Error::Config("the baseline engine abstracts every period; use m = 1 or another engine".into()));
        }
        if self.engine == Engine::IbpComposed && self.plant.affine().is_none() {
            return Err(Error::Config(
                "ibp_composed needs affine dynamics; use star_composed or baseline for the taxi plant".into(),
            ));
        }
        if self.egress.len() != k {
            return Err(Error::Config("one egress rule pair per state dimension expected".into()));
        }
        for u in &self.unsafe_boxes {
            if u.dim() != k {
                return Err(Error::Config("unsafe box dimension differs from the state".into()));
            }
        }
        Ok(())
    }

    /// Index of the `out` node.
    pub fn out_node(&self) -> usize {
        self.grid.total()
    }

    pub fn node_count(&self) -> usize {
        self.grid.total() + 1
    }

    pub fn empty_set(&self) -> CellSet {
        CellSet::new(self.node_count())
    }

    /// Cells touching an unsafe box, plus `out`.
    pub fn unsafe_cells(&self) -> CellSet {
        let mut set = self.empty_set();
        for u in &self.unsafe_boxes {
            if let Ok(cells) = self.grid.alpha_box(u) {
                set.union_with(&cells.resized(self.node_count()));
            }
        }
        set.insert(self.out_node());
        set
    }

    fn policy(&self, f: Face) -> EgressPolicy {
        self.egress[f.dim][f.upper as usize]
    }

    /// The same scenario with another engine and unrolling depth.
    pub fn variant(&self, engine: Engine, m: usize) -> Scenario {
        Scenario { engine, m, ..self.clone() }
    }
}

/// Successor information for one start cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReach {
    /// Cells reached after `i + 1` periods, `i < m`.
    pub per_period: Vec<CellSet>,
    /// Exact analysis exceeded its budget; interval fallback used.
    pub degraded: bool,
    /// Analysis failed or left through an unverifiable face.
    pub unverifiable: bool,
}

/// Set of states reached after some number of periods.
enum Region {
    Boxes(IntervalBox),
    Stars(StarUnion),
}

/// Precomputed per-scenario data for the reach kernels.
pub struct Analyzer<'a> {
    sc: &'a Scenario,
    affine: Option<AffineDynamics>,
    unrolled: Vec<Network>,
}

impl<'a> Analyzer<'a> {
    pub fn new(sc: &'a Scenario) -> Result<Self> {
        sc.validate()?;
        let affine = sc.plant.affine();
        let mut unrolled = Vec::new();
        if sc.engine == Engine::IbpComposed {
            let dynamics = affine.as_ref().expect("validated");
            for i in 1..=sc.m {
                unrolled.push(sc.network.unroll_affine_system(dynamics, i, sc.latent_box.dim())?);
            }
        }
        Ok(Self { sc, affine, unrolled })
    }

    pub fn scenario(&self) -> &Scenario {
        self.sc
    }

    /// Reach sets of one cell for periods `1..=m`.
    pub fn cell_reach(&self, cell: usize) -> CellReach {
        let sc = self.sc;
        if cell == sc.out_node() {
            let mut out = sc.empty_set();
            out.insert(cell);
            return CellReach { per_period: vec![out; sc.m], degraded: false, unverifiable: false };
        }
        let start = sc.grid.cell_box_flat(cell);
        let mut degraded = false;
        let regions = match sc.engine {
            Engine::Baseline => self.box_chain(&start, 1),
            Engine::IbpComposed => self.ibp_composed(&start),
            Engine::StarComposed => match self.star_chain(&start) {
                Err(Error::SplitBudgetExceeded { .. }) => {
                    degraded = true;
                    match &self.affine {
                        Some(_) if !self.unrolled.is_empty() => self.ibp_composed(&start),
                        _ => self.box_chain(&start, sc.m),
                    }
                }
                other => other,
            },
        };
        let everything = || {
            let mut all = CellSet::full(sc.node_count());
            all.insert(sc.out_node());
            all
        };
        let regions = match regions {
            Ok(r) => r,
            Err(_) => {
                return CellReach { per_period: vec![everything(); sc.m], degraded, unverifiable: true };
            }
        };
        let mut unverifiable = false;
        let mut per_period = Vec::with_capacity(regions.len());
        for region in &regions {
            match self.abstract_region(region) {
                Ok((cells, flagged)) => {
                    unverifiable |= flagged;
                    per_period.push(cells);
                }
                Err(_) => {
                    return CellReach { per_period: vec![everything(); sc.m], degraded, unverifiable: true };
                }
            }
        }
        CellReach { per_period, degraded, unverifiable }
    }

    /// α of a region plus egress handling; the flag reports unverifiable
    /// egress.
    fn abstract_region(&self, region: &Region) -> Result<(CellSet, bool)> {
        let sc = self.sc;
        let mut flagged = false;
        let mut exits = false;
        let mut note = |faces: Vec<Face>| {
            for f in faces {
                match sc.policy(f) {
                    EgressPolicy::Unsafe => exits = true,
                    EgressPolicy::Unverifiable => {
                        exits = true;
                        flagged = true;
                    }
                    EgressPolicy::Absorbing => {}
                }
            }
        };
        let cells = match region {
            Region::Boxes(b) => {
                note(sc.grid.egress(b));
                match sc.grid.alpha_box(b) {
                    Ok(c) => c,
                    Err(Error::OutOfDomain) => CellSet::new(sc.grid.total()),
                    Err(e) => return Err(e),
                }
            }
            Region::Stars(u) => {
                for s in u.iter() {
                    note(sc.grid.egress(&s.box_bounds()?));
                }
                sc.grid.alpha_stars(u)?
            }
        };
        let mut cells = cells.resized(sc.node_count());
        if exits {
            cells.insert(sc.out_node());
        }
        Ok((cells, flagged))
    }

    /// One interval period from a state box.
    fn box_step(&self, x: &IntervalBox) -> Result<IntervalBox> {
        let sc = self.sc;
        let u = ibp(&sc.network, &x.product(&sc.latent_box))?;
        match &sc.plant {
            Plant::Taxi(p) => taxi_monotonic_step(x, u[0], p),
            _ => {
                let (a, b, c) = self.affine.as_ref().expect("non-taxi plants are affine").period_map();
                let mut lo_hi = Vec::with_capacity(x.dim());
                for i in 0..x.dim() {
                    let mut acc = Interval::point(c[i]);
                    for j in 0..x.dim() {
                        acc = acc + x[j] * a[[i, j]];
                    }
                    for j in 0..u.dim() {
                        acc = acc + u[j] * b[[i, j]];
                    }
                    lo_hi.push(acc);
                }
                Ok(IntervalBox::new(lo_hi))
            }
        }
    }

    /// `periods` interval steps without abstraction in between.
    fn box_chain(&self, start: &IntervalBox, periods: usize) -> Result<Vec<Region>> {
        let mut x = start.clone();
        let mut out = Vec::with_capacity(periods);
        for _ in 0..periods {
            x = self.box_step(&x)?;
            out.push(Region::Boxes(x.clone()));
        }
        Ok(out)
    }

    fn ibp_composed(&self, start: &IntervalBox) -> Result<Vec<Region>> {
        let sc = self.sc;
        let mut out = Vec::with_capacity(sc.m);
        let mut input = start.clone();
        for net in &self.unrolled {
            input = input.product(&sc.latent_box);
            out.push(Region::Boxes(ibp(net, &input)?));
        }
        Ok(out)
    }

    fn star_chain(&self, start: &IntervalBox) -> Result<Vec<Region>> {
        let sc = self.sc;
        let mut stars = vec![StarSet::from_box(start)];
        let mut out = Vec::with_capacity(sc.m);
        for j in 0..sc.m {
            let mut next = Vec::new();
            for s in &stars {
                next.extend(self.star_period(s)?);
                if next.len() > sc.split_cap {
                    return Err(Error::SplitBudgetExceeded { cap: sc.split_cap });
                }
            }
            if j + 1 < sc.m {
                stars = self.cut_absorbed(&next)?.iter().map(StarSet::merge_free_generators).collect();
            }
            out.push(Region::Stars(StarUnion::new(next)));
        }
        Ok(out)
    }

    /// Drops the parts of each star lying beyond absorbing faces.
    fn cut_absorbed(&self, stars: &[StarSet]) -> Result<Vec<StarSet>> {
        let sc = self.sc;
        let mut kept = Vec::with_capacity(stars.len());
        'stars: for s in stars {
            let mut s = s.clone();
            for (d, rule) in sc.egress.iter().enumerate() {
                let iv = sc.grid.bounds()[d];
                let q = s.quick_bounds_of(d);
                let mut g = vec![0.0; s.dim()];
                if rule[0] == EgressPolicy::Absorbing && q.lo < iv.lo {
                    g[d] = -1.0;
                    s = s.add_halfspace(&g, -iv.lo)?;
                }
                if rule[1] == EgressPolicy::Absorbing && q.hi > iv.hi {
                    g[d] = 1.0;
                    s = s.add_halfspace(&g, iv.hi)?;
                }
            }
            if s.num_constraints() > 0 && !s.is_feasible()? {
                continue 'stars;
            }
            kept.push(s);
        }
        Ok(kept)
    }

    /// One closed-loop period on a state star.
    fn star_period(&self, x: &StarSet) -> Result<Vec<StarSet>> {
        let sc = self.sc;
        let k = x.dim();
        let input = x.product_box(&sc.latent_box);
        let leaves = exact_star(&sc.network, &input, sc.split_cap)?;
        let mut out = Vec::with_capacity(leaves.len());
        for leaf in leaves.iter() {
            // pair the leaf with the state rows of the input over shared coefficients
            let mut center = input.center().slice(s![..k]).to_vec();
            center.extend(leaf.center().iter());
            let mut basis = Array2::zeros((k + leaf.dim(), leaf.latent_dim()));
            basis.slice_mut(s![..k, ..]).assign(&input.basis().slice(s![..k, ..]));
            basis.slice_mut(s![k.., ..]).assign(leaf.basis());
            let joint = leaf.with_map(Array1::from(center), basis)?;
            let next = match &sc.plant {
                Plant::Taxi(p) => {
                    let phi = match joint.coordinate_bounds(2) {
                        Ok(iv) => iv,
                        Err(Error::InfeasibleStar) => continue,
                        Err(e) => return Err(e),
                    };
                    phi.tan()?;
                    let mut z = joint;
                    for _ in 0..p.substeps {
                        let theta = z.coordinate_bounds(1)?;
                        z = taxi_linearized_step_within(&z, theta, phi, p)?;
                    }
                    z.project(&[0, 1])
                }
                _ => {
                    let (a, b, c) = self.affine.as_ref().expect("non-taxi plants are affine").period_map();
                    let mut ab = Array2::zeros((k, k + b.ncols()));
                    ab.slice_mut(s![.., ..k]).assign(&a);
                    ab.slice_mut(s![.., k..]).assign(&b);
                    joint.affine_map(&ab, &c)?
                }
            };
            out.push(next);
        }
        Ok(out)
    }
}

/// Per-cell results computed on demand and kept for reuse.
pub struct CellCache<'a> {
    analyzer: Analyzer<'a>,
    cells: Vec<Option<CellReach>>,
    pool: rayon::ThreadPool,
}

impl<'a> CellCache<'a> {
    pub fn new(sc: &'a Scenario) -> Result<Self> {
        let analyzer = Analyzer::new(sc)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(sc.workers)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self { analyzer, cells: vec![None; sc.node_count()], pool })
    }

    /// Computes every missing cell of `wanted`.
    pub fn ensure(&mut self, wanted: impl IntoIterator<Item = usize>) {
        let missing: Vec<usize> = wanted.into_iter().filter(|&c| self.cells[c].is_none()).collect();
        let analyzer = &self.analyzer;
        let results: Vec<CellReach> = self.pool.install(|| missing.par_iter().map(|&c| analyzer.cell_reach(c)).collect());
        for (c, r) in missing.into_iter().zip(results) {
            self.cells[c] = Some(r);
        }
    }

    pub fn get(&self, cell: usize) -> &CellReach {
        self.cells[cell].as_ref().expect("cell computed")
    }

    pub fn get_or_compute(&mut self, cell: usize) -> &CellReach {
        self.ensure([cell]);
        self.get(cell)
    }

    fn flagged(&self, pick: impl Fn(&CellReach) -> bool) -> CellSet {
        let mut set = CellSet::new(self.analyzer.sc.grid.total());
        for (c, r) in self.cells.iter().enumerate() {
            if r.as_ref().is_some_and(&pick) && c < self.analyzer.sc.grid.total() {
                set.insert(c);
            }
        }
        set
    }
}

/// Forward fixpoint output.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachResult {
    pub per_step: Vec<CellSet>,
    pub global: CellSet,
    pub converged_at: Option<usize>,
    pub is_safe: bool,
    pub degraded: CellSet,
    pub unverifiable: CellSet,
}

impl ReachResult {
    /// Cells reachable at step `t`, continuing periodically after
    /// convergence.
    pub fn step_set(&self, t: usize, m: usize) -> Option<&CellSet> {
        if t < self.per_step.len() {
            return Some(&self.per_step[t]);
        }
        // after convergence at k the sets repeat with period m
        let k = self.converged_at?;
        Some(&self.per_step[k + (t - k) % m])
    }

    /// Number of grid cells (not counting `out`) in the global set.
    pub fn global_cells(&self, grid: &Grid) -> usize {
        self.global.iter().filter(|&c| c < grid.total()).count()
    }

    pub fn reaches_out(&self, grid: &Grid) -> bool {
        self.global.contains(grid.total())
    }

    pub fn to_json(&self, grid: &Grid) -> serde_json::Value {
        json!({
            "per_step": self.per_step.iter().map(|s| grid.index_tuples(s)).collect::<Vec<_>>(),
            "global": grid.index_tuples(&self.global),
            "converged_at": self.converged_at,
            "is_safe": self.is_safe,
            "degraded": grid.index_tuples(&self.degraded),
            "unverifiable": grid.index_tuples(&self.unverifiable),
            "exits_domain": self.reaches_out(grid),
        })
    }

    /// One row per (step, cell) plus global rows with step `-1`.
    pub fn to_csv(&self, grid: &Grid) -> String {
        let mut out = cell_csv_header(grid);
        for (t, set) in self.per_step.iter().enumerate() {
            append_cell_rows(&mut out, grid, &t.to_string(), set);
        }
        append_cell_rows(&mut out, grid, "-1", &self.global);
        out
    }
}

pub fn cell_csv_header(grid: &Grid) -> String {
    let mut cols = vec!["step".to_string()];
    cols.extend((0..grid.dim()).map(|d| format!("i{d}")));
    for d in 0..grid.dim() {
        cols.push(format!("lo{d}"));
        cols.push(format!("hi{d}"));
    }
    cols.join(",") + "\n"
}

pub fn append_cell_rows(out: &mut String, grid: &Grid, label: &str, set: &CellSet) {
    for idx in grid.index_tuples(set) {
        let b = grid.cell_box(&idx);
        let mut row = vec![label.to_string()];
        row.extend(idx.iter().map(usize::to_string));
        for iv in b.iter() {
            row.push(format!("{}", iv.lo));
            row.push(format!("{}", iv.hi));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
}

/// Union of the `i`-period successors (`i` in `1..=m`) of every cell.
pub fn freach(cache: &mut CellCache<'_>, cells: &CellSet, i: usize) -> CellSet {
    cache.ensure(cells.iter());
    let sc = cache.analyzer.sc;
    let mut out = sc.empty_set();
    for c in cells.iter() {
        out.union_with(&cache.get(c).per_period[i - 1]);
    }
    out
}

pub fn forward_reach(sc: &Scenario, r0: &IntervalBox) -> Result<ReachResult> {
    let mut cache = CellCache::new(sc)?;
    forward_reach_with(&mut cache, r0)
}

pub fn forward_reach_with(cache: &mut CellCache<'_>, r0: &IntervalBox) -> Result<ReachResult> {
    let sc = cache.analyzer.sc;
    if !r0.is_subset_of(sc.grid.bounds()) {
        return Err(Error::Config("initial set must lie inside the grid bounds".into()));
    }
    let c0 = sc.grid.alpha_box(r0)?.resized(sc.node_count());
    let mut per_step = vec![c0.clone()];
    let mut global = c0;
    let mut converged_at = None;
    let mut k = 0;
    while converged_at.is_none() && k < sc.k_max {
        let ck = per_step[k].clone();
        for i in 1..=sc.m {
            let next = freach(cache, &ck, i);
            global.union_with(&next);
            per_step.push(next);
        }
        if per_step[k] == per_step[k + sc.m] {
            converged_at = Some(k);
        }
        k += sc.m;
    }
    let degraded = cache.flagged(|r| r.degraded);
    let unverifiable = cache.flagged(|r| r.unverifiable);
    let is_safe = global.is_disjoint(&sc.unsafe_cells()) && unverifiable.is_empty();
    Ok(ReachResult { per_step, global, converged_at, is_safe, degraded, unverifiable })
}

/// Forward successor relations `fwd[i][c]` for `i = 1..=m` and their
/// inverses, over all grid cells plus `out`.
#[derive(Debug, Clone)]
pub struct TransitionMaps {
    pub fwd: Vec<Vec<CellSet>>,
    pub bwd: Vec<Vec<CellSet>>,
    pub degraded: CellSet,
    pub unverifiable: CellSet,
}

pub fn build_transition_maps(sc: &Scenario) -> Result<TransitionMaps> {
    let mut cache = CellCache::new(sc)?;
    let n = sc.node_count();
    cache.ensure(0..n);
    let mut fwd = vec![Vec::with_capacity(n); sc.m];
    let mut bwd = vec![vec![sc.empty_set(); n]; sc.m];
    for c in 0..n {
        let r = cache.get(c);
        for i in 0..sc.m {
            for t in r.per_period[i].iter() {
                bwd[i][t].insert(c);
            }
            fwd[i].push(r.per_period[i].clone());
        }
    }
    Ok(TransitionMaps {
        fwd,
        bwd,
        degraded: cache.flagged(|r| r.degraded),
        unverifiable: cache.flagged(|r| r.unverifiable),
    })
}

/// Possibly-unsafe cells (including `out`); the complement is safe.
pub fn backward_reach(sc: &Scenario, maps: &TransitionMaps) -> CellSet {
    let target = sc.unsafe_cells();
    let mut a = target.clone();
    for c in 0..sc.node_count() {
        for i in 1..sc.m {
            if !maps.fwd[i - 1][c].is_disjoint(&target) {
                a.insert(c);
            }
        }
    }
    let mut frontier = a.clone();
    while !frontier.is_empty() {
        let mut reached = sc.empty_set();
        for c in frontier.iter() {
            reached.union_with(&maps.bwd[sc.m - 1][c]);
        }
        reached.difference_with(&a);
        a.union_with(&reached);
        frontier = reached;
    }
    a
}

/// Grid cells proven safe: those outside the backward set.
pub fn safe_cells(sc: &Scenario, unsafe_set: &CellSet) -> CellSet {
    let mut safe = CellSet::full(sc.grid.total());
    safe.difference_with(&unsafe_set.resized(sc.grid.total()));
    safe
}

/// Why a simulated run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunEnd {
    Horizon,
    /// Entered an unsafe box or left through an unsafe face.
    Unsafe,
    /// Left through an unverifiable or absorbing face.
    Left(Face),
    /// Braking plant came to rest; the run is retired.
    Stopped,
    /// Steering command beyond the tan pole.
    Pole,
}

/// A closed-loop run from `x0` for up to `horizon` periods.
///
/// Returns the states that stayed inside the grid (starting with `x0`),
/// and the reason the run ended.
pub fn simulate_run<R: Rng>(sc: &Scenario, x0: &[f64], horizon: usize, rng: &mut R) -> (Vec<Vec<f64>>, RunEnd) {
    let mut traj = vec![x0.to_vec()];
    let mut x = x0.to_vec();
    for t in 0..=horizon {
        if sc.unsafe_boxes.iter().any(|u| u.contains(&x)) {
            return (traj, RunEnd::Unsafe);
        }
        if t == horizon {
            break;
        }
        let z: Vec<f64> = sc.latent_box.iter().map(|iv| iv.lo + rng.random::<f64>() * iv.width()).collect();
        let mut input = x.clone();
        input.extend(z);
        let u = sc.network.eval(&input).expect("validated shapes");
        x = match sc.plant.step(&x, &u) {
            Ok(next) => next,
            Err(_) => return (traj, RunEnd::Pole),
        };
        if let Plant::Brake(_) = sc.plant {
            if x[1] <= 0.0 {
                return (traj, RunEnd::Stopped);
            }
        }
        let faces = sc.grid.egress(&IntervalBox::point(&x));
        if let Some(&f) = faces.first() {
            return match sc.policy(f) {
                EgressPolicy::Unsafe => (traj, RunEnd::Unsafe),
                _ => (traj, RunEnd::Left(f)),
            };
        }
        traj.push(x.clone());
    }
    (traj, RunEnd::Horizon)
}

/// Deterministic per-cell generator.
pub fn cell_rng(seed: u64, cell: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell as u64 + 1);
    rng
}

/// Cells from which some random run reaches the unsafe set within
/// `horizon` periods.
pub fn simulate_cells(sc: &Scenario, runs_per_cell: usize, horizon: usize) -> CellSet {
    let total = sc.grid.total();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(sc.workers).build();
    let flag = |c: usize| {
        let mut rng = cell_rng(sc.seed, c);
        let b = sc.grid.cell_box_flat(c);
        (0..runs_per_cell).any(|_| {
            let x0: Vec<f64> = b.iter().map(|iv| iv.lo + rng.random::<f64>() * iv.width()).collect();
            simulate_run(sc, &x0, horizon, &mut rng).1 == RunEnd::Unsafe
        })
    };
    let flags: Vec<bool> = match pool {
        Ok(p) => p.install(|| (0..total).into_par_iter().map(flag).collect()),
        Err(_) => (0..total).map(flag).collect(),
    };
    flags.iter().enumerate().filter(|(_, &f)| f).map(|(c, _)| c).collect::<CellSet>().resized(total)
}

/// Per-output cell index ranges `(first, last)` proven to contain the image
/// of `input` under `net`.
///
/// Starts from the ranges hit by `sims` random samples and widens by one
/// cell on each violated side until the interval bound of the image fits.
pub fn prove_bounds_incremental<R: Rng>(
    net: &Network,
    input: &IntervalBox,
    sims: usize,
    grid: &Grid,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if net.out_dim() != grid.dim() {
        return Err(Error::Dimension("network outputs must match grid dimensions".into()));
    }
    let mut ranges: Vec<(usize, usize)> = Vec::new();
    for k in 0..sims.max(1) {
        let x = if k == 0 { input.center() } else { input.lerp(&(0..input.dim()).map(|_| rng.random::<f64>()).collect::<Vec<_>>()) };
        let idx = grid.cell_of(&net.eval(&x)?)?;
        if ranges.is_empty() {
            ranges = idx.iter().map(|&i| (i, i)).collect();
        }
        for (r, &i) in ranges.iter_mut().zip(&idx) {
            r.0 = r.0.min(i);
            r.1 = r.1.max(i);
        }
    }
    let bound = ibp(net, input)?;
    loop {
        let mut fits = true;
        for (d, r) in ranges.iter_mut().enumerate() {
            if bound[d].lo < grid.edge(d, r.0) {
                fits = false;
                r.0 = r.0.checked_sub(1).ok_or(Error::OutOfDomain)?;
            }
            if bound[d].hi > grid.edge(d, r.1 + 1) {
                fits = false;
                if r.1 + 1 >= grid.counts()[d] {
                    return Err(Error::OutOfDomain);
                }
                r.1 += 1;
            }
        }
        if fits {
            return Ok(ranges);
        }
    }
}
