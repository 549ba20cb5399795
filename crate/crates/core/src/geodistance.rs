//! Distance between PSD matrices of arbitrary size and rank: a Grassmann
//! term on the ranges combined with a fiber term on the operators.

use crate::divergence::{divergence, DivergenceKind, FiberDivergence};
use crate::error::{Error, Result};
use crate::grassmann::{grassmann_distance, GrassmannMetric};
use crate::io::json_number;
use crate::linalg::{
    hermitian_part, pad_rows, pencil_eigenvalues, principal_frames, stratum_index, PrincipalSystem, PsdMatrix,
    Tolerances,
};
use crate::optim::{minimize, LocalOptions};
use crate::pointset::{alpha_beta_pointset, clamped_pencil, Side};
use crate::scalar::{Field, Scalar};
use crate::unitary::{embed_trailing, group_grid, haar_unitary, skew_dim, unitary_from_params};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HausdorffMode {
    /// Maximize over the unitary ambiguity of the larger fiber.
    Algorithm1,
    /// Sample the representation set and take the generalized Hausdorff value.
    Faithful,
}

impl FromStr for HausdorffMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "algorithm1" | "alg1" | "optimized" => Ok(HausdorffMode::Algorithm1),
            "faithful" | "sampled" => Ok(HausdorffMode::Faithful),
            other => Err(Error::InvalidSpec(format!("unknown Hausdorff mode '{other}'"))),
        }
    }
}

impl fmt::Display for HausdorffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HausdorffMode::Algorithm1 => "algorithm1",
            HausdorffMode::Faithful => "faithful",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSpec {
    pub grassmann: GrassmannMetric,
    pub fiber: FiberDivergence,
    pub hausdorff_mode: HausdorffMode,
}

impl MetricSpec {
    pub fn new(grassmann: GrassmannMetric, fiber: FiberDivergence) -> Self {
        MetricSpec {
            grassmann,
            fiber,
            hausdorff_mode: HausdorffMode::Algorithm1,
        }
    }

    /// Geodesic Grassmann distance with the affine-invariant fiber distance.
    pub fn geodesic() -> Self {
        MetricSpec::new(GrassmannMetric::Geodesic, FiberDivergence::geodesic())
    }

    pub fn with_mode(mut self, mode: HausdorffMode) -> Self {
        self.hausdorff_mode = mode;
        self
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GdOptions {
    pub tol: Tolerances,
    /// Multi-start count for the degenerate-stratum maximization.
    pub restarts: usize,
    /// Approximate number of ambiguity-group samples in faithful mode.
    pub grid: usize,
    pub seed: u64,
}

impl Default for GdOptions {
    fn default() -> Self {
        GdOptions {
            tol: Tolerances::default(),
            restarts: 16,
            grid: 1 << 16,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    ClosedForm,
    OptimizedDegenerate,
    FaithfulSampled,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::ClosedForm => "closedForm",
            EvalMode::OptimizedDegenerate => "optimizedDegenerate",
            EvalMode::FaithfulSampled => "faithfulSampled",
        }
    }
}

#[derive(Clone, Debug)]
pub struct GdResult {
    pub total: f64,
    pub grassmann_term: f64,
    pub fiber_term: f64,
    pub stratum_index: usize,
    /// Principal angles, ascending.
    pub angles: Vec<f64>,
    /// Unclamped pencil spectrum behind the fiber term (empty when sampled).
    pub pencil_spectrum: Vec<f64>,
    pub mode: EvalMode,
}

impl GdResult {
    /// One-line JSON object; numbers carry 17 significant digits and
    /// non-finite values are written as `null`.
    pub fn to_json(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|&x| json_number(x)).collect::<Vec<_>>().join(", ");
        format!(
            "{{\"total\": {}, \"grassmann_term\": {}, \"fiber_term\": {}, \"stratum_index\": {}, \"angles\": [{}], \"pencil_spectrum\": [{}], \"mode\": \"{}\"}}",
            json_number(self.total),
            json_number(self.grassmann_term),
            json_number(self.fiber_term),
            self.stratum_index,
            list(&self.angles),
            list(&self.pencil_spectrum),
            self.mode.as_str()
        )
    }
}

/// Principal system of the ranges plus both fiber representations in the
/// aligned bases.
struct Aligned<T: Scalar> {
    ps: PrincipalSystem<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
    l: usize,
}

fn congruence_diag<T: Scalar>(p: &DMatrix<T>, vals: &[f64]) -> DMatrix<T> {
    let mut scaled = p.adjoint();
    for (k, &v) in vals.iter().enumerate() {
        for x in scaled.column_mut(k).iter_mut() {
            *x = x.scale(v);
        }
    }
    hermitian_part(&(scaled * p))
}

fn align<T: Scalar>(a: &PsdMatrix<T>, b: &PsdMatrix<T>, tol: &Tolerances) -> Result<Aligned<T>> {
    let n = a.dim().max(b.dim());
    let (fa, va) = a.compact(tol.rank);
    let (fb, vb) = b.compact(tol.rank);
    if va.is_empty() || vb.is_empty() {
        return Err(Error::ZeroRank);
    }
    let ps = principal_frames(&pad_rows(&fa, n)?, &pad_rows(&fb, n)?)?;
    let l = stratum_index(&ps, tol.stratum);
    let c = congruence_diag(&ps.p, &va);
    let d = congruence_diag(&ps.q, &vb);
    Ok(Aligned { ps, c, d, l })
}

/// Fiber value and the unclamped pencil spectrum for representations `x`
/// (from the first argument) and `y`. Equal sizes use the divergence itself;
/// otherwise the smaller matrix is compared with `Ω₋` of the larger.
fn fiber_value<T: Scalar>(fiber: &FiberDivergence, x: &DMatrix<T>, y: &DMatrix<T>) -> Result<(f64, Vec<f64>)> {
    let (r, s) = (x.nrows(), y.nrows());
    if r == s {
        let lam = pencil_eigenvalues(x, y)?;
        return Ok((fiber.evaluate_spectrum(&lam)?, lam));
    }
    let (small, large) = if r < s { (x, y) } else { (y, x) };
    let (raw, clamped) = clamped_pencil(small, large)?;
    let value = match fiber.kind {
        DivergenceKind::GeodesicAB { alpha, beta } if beta != 0.0 => {
            fiber
                .bound
                .apply(alpha_beta_pointset(small, large, alpha, beta, Side::Minus)?)
        }
        _ => fiber.evaluate_spectrum(&clamped)?,
    };
    Ok((value, raw))
}

/// Divergence on positive definite matrices of any two sizes.
pub fn extended_divergence<T: Scalar>(fiber: &FiberDivergence, x: &DMatrix<T>, y: &DMatrix<T>) -> Result<f64> {
    if x.nrows() == y.nrows() {
        return divergence(fiber, x, y);
    }
    Ok(fiber_value(fiber, x, y)?.0)
}

fn combine(g: f64, f: f64) -> f64 {
    if g.is_finite() && f.is_finite() {
        g.hypot(f)
    } else {
        f64::INFINITY
    }
}

pub fn gd<T: Scalar>(a: &PsdMatrix<T>, b: &PsdMatrix<T>, spec: &MetricSpec, opts: &GdOptions) -> Result<GdResult> {
    if a.entries() == b.entries() {
        let r = a.rank(opts.tol.rank);
        return Ok(GdResult {
            total: 0.0,
            grassmann_term: 0.0,
            fiber_term: 0.0,
            stratum_index: 0,
            angles: vec![0.0; r],
            pencil_spectrum: vec![1.0; r],
            mode: EvalMode::ClosedForm,
        });
    }
    let al = align(a, b, &opts.tol)?;
    let grassmann_term = grassmann_distance(spec.grassmann, &al.ps.theta)?;
    let (fiber_term, pencil_spectrum, mode) = if al.l == 0 {
        let (v, lam) = fiber_value(&spec.fiber, &al.c, &al.d)?;
        (v, lam, EvalMode::ClosedForm)
    } else {
        match spec.hausdorff_mode {
            HausdorffMode::Algorithm1 => {
                let (v, lam) = gd_degenerate_fiber(&al.c, &al.d, al.l, &spec.fiber, opts.restarts, opts.seed)?;
                (v, lam, EvalMode::OptimizedDegenerate)
            }
            HausdorffMode::Faithful => (
                sampled_fiber(&al, &spec.fiber, opts)?,
                Vec::new(),
                EvalMode::FaithfulSampled,
            ),
        }
    };
    Ok(GdResult {
        total: combine(grassmann_term, fiber_term),
        grassmann_term,
        fiber_term,
        stratum_index: al.l,
        angles: al.ps.theta.clone(),
        pencil_spectrum,
        mode,
    })
}

/// Evaluation straight from the definition: sampled representation set and
/// generalized Hausdorff value, on every stratum.
pub fn gd_faithful<T: Scalar>(
    a: &PsdMatrix<T>,
    b: &PsdMatrix<T>,
    spec: &MetricSpec,
    opts: &GdOptions,
) -> Result<GdResult> {
    let al = align(a, b, &opts.tol)?;
    let grassmann_term = grassmann_distance(spec.grassmann, &al.ps.theta)?;
    let fiber_term = sampled_fiber(&al, &spec.fiber, opts)?;
    Ok(GdResult {
        total: combine(grassmann_term, fiber_term),
        grassmann_term,
        fiber_term,
        stratum_index: al.l,
        angles: al.ps.theta.clone(),
        pencil_spectrum: Vec::new(),
        mode: EvalMode::FaithfulSampled,
    })
}

fn sampled_fiber<T: Scalar>(al: &Aligned<T>, fiber: &FiberDivergence, opts: &GdOptions) -> Result<f64> {
    let rep = representation_from(al, opts.grid, opts.seed);
    generalized_hausdorff(&rep.pairs, |i, j| extended_divergence(fiber, &rep.xs[i], &rep.ys[j]))
}

/// `max_T δ(C, blkdiag(I, T) D blkdiag(I, T*))` over `T ∈ U(s - r + l)`
/// acting on the trailing block of the larger representation. Returns the
/// value and the pencil spectrum at the maximizer.
pub fn gd_degenerate_fiber<T: Scalar>(
    c: &DMatrix<T>,
    d: &DMatrix<T>,
    l: usize,
    fiber: &FiberDivergence,
    restarts: usize,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    let a_first = c.nrows() <= d.nrows();
    let (small, large) = if a_first { (c, d) } else { (d, c) };
    let (rs, rl) = (small.nrows(), large.nrows());
    if l > rs {
        return Err(Error::Dimension(format!("stratum index {l} exceeds rank {rs}")));
    }
    let k = rl - rs + l;
    let eval = |t: &DMatrix<T>| -> Result<(f64, Vec<f64>)> {
        let e = embed_trailing(rl, t);
        let moved = hermitian_part(&(&e * large * e.adjoint()));
        if a_first {
            fiber_value(fiber, small, &moved)
        } else {
            fiber_value(fiber, &moved, small)
        }
    };
    if k == 0 || (k == 1 && T::FIELD == Field::Real) {
        return eval(&DMatrix::identity(k, k));
    }
    let dim = skew_dim::<T>(k);
    let opts = LocalOptions {
        max_iter: 200,
        ..Default::default()
    };
    let runs: Vec<(f64, DMatrix<T>)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5851_F42D * i as u64));
            let mut base = if i == 0 {
                DMatrix::identity(k, k)
            } else {
                haar_unitary::<T, _>(k, &mut rng)
            };
            if T::FIELD == Field::Real && i % 2 == 1 {
                base.column_mut(k - 1).neg_mut();
            }
            let objective = |p: &[f64]| match eval(&unitary_from_params(&base, p)) {
                Ok((v, _)) => -v,
                Err(_) => f64::INFINITY,
            };
            let res = minimize(objective, &vec![0.0; dim], &opts);
            (-res.value, unitary_from_params(&base, &res.x))
        })
        .collect();
    let best = runs
        .into_iter()
        .filter(|(v, _)| v.is_finite())
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::NonConvergence("no restart produced a finite fiber value".into()))?;
    eval(&best.1)
}

/// Sampled representation set `Z ⊆ X × Y`: `xs[i]`, `ys[j]` are fiber
/// representations of the first and second matrix for sampled principal
/// vectors, paired when they come from the same principal system.
#[derive(Clone, Debug)]
pub struct RepresentationSet<T: Scalar> {
    pub xs: Vec<DMatrix<T>>,
    pub ys: Vec<DMatrix<T>>,
    pub pairs: Vec<(usize, usize)>,
}

pub fn representation_set<T: Scalar>(
    a: &PsdMatrix<T>,
    b: &PsdMatrix<T>,
    grid: usize,
    opts: &GdOptions,
) -> Result<RepresentationSet<T>> {
    Ok(representation_from(&align(a, b, &opts.tol)?, grid, opts.seed))
}

const P_SAMPLES: usize = 64;

fn block_diag<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = DMatrix::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        let k = b.nrows();
        m.view_mut((at, at), (k, k)).copy_from(b);
        at += k;
    }
    m
}

fn key<T: Scalar>(m: &DMatrix<T>, scale: f64) -> Vec<i64> {
    let q = 1e-9 * scale;
    m.iter()
        .flat_map(|v| [(v.re() / q).round() as i64, (v.im() / q).round() as i64])
        .collect()
}

struct Dedup<T: Scalar> {
    items: Vec<DMatrix<T>>,
    index: HashMap<Vec<i64>, usize>,
    scale: f64,
}

impl<T: Scalar> Dedup<T> {
    fn new(scale: f64) -> Self {
        Dedup {
            items: Vec::new(),
            index: HashMap::new(),
            scale,
        }
    }

    fn insert(&mut self, m: DMatrix<T>) -> usize {
        let k = key(&m, self.scale);
        if let Some(&i) = self.index.get(&k) {
            return i;
        }
        self.items.push(m);
        self.index.insert(k, self.items.len() - 1);
        self.items.len() - 1
    }
}

fn representation_from<T: Scalar>(al: &Aligned<T>, grid: usize, seed: u64) -> RepresentationSet<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r, s) = (al.c.nrows(), al.d.nrows());
    let k = r.min(s);
    let nz = k - al.l;

    // Joint ambiguity: unitary blocks over clusters of equal nonzero cosines.
    let mut clusters: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < nz {
        let mut j = i + 1;
        while j < nz && (al.ps.sigma[i] - al.ps.sigma[j]).abs() <= 1e-9 {
            j += 1;
        }
        clusters.push(j - i);
        i = j;
    }
    let grids: Vec<Vec<DMatrix<T>>> = clusters.iter().map(|&c| group_grid::<T, _>(c, 8, &mut rng)).collect();
    let full: usize = grids
        .iter()
        .map(|g| g.len())
        .try_fold(1usize, |acc, n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);
    let mut p_samples: Vec<DMatrix<T>> = Vec::new();
    if full <= P_SAMPLES {
        for idx in 0..full {
            let mut rem = idx;
            let picks: Vec<&DMatrix<T>> = grids
                .iter()
                .map(|g| {
                    let pick = &g[rem % g.len()];
                    rem /= g.len();
                    pick
                })
                .collect();
            p_samples.push(block_diag(&picks));
        }
    } else {
        for idx in 0..P_SAMPLES {
            let picks: Vec<&DMatrix<T>> = grids
                .iter()
                .map(|g| {
                    if idx == 0 {
                        &g[0]
                    } else {
                        &g[rng.random_range(0..g.len())]
                    }
                })
                .collect();
            p_samples.push(block_diag(&picks));
        }
    }

    let (ta, tb) = (r - nz, s - nz);
    let budget = (grid / p_samples.len()).max(1);
    let (na, nb) = match (ta > 0, tb > 0) {
        (true, true) => {
            let side = (budget as f64).sqrt().ceil() as usize;
            (side, side)
        }
        (true, false) => (budget, 1),
        (false, true) => (1, budget),
        (false, false) => (1, 1),
    };
    let sa = group_grid::<T, _>(ta, na, &mut rng);
    let sb = group_grid::<T, _>(tb, nb, &mut rng);

    let scale = 1.0 + crate::linalg::max_abs(&al.c).max(crate::linalg::max_abs(&al.d));
    let mut xs = Dedup::new(scale);
    let mut ys = Dedup::new(scale);
    let mut pairs = HashSet::new();
    for p in &p_samples {
        let xi: Vec<usize> = sa
            .iter()
            .map(|u| {
                let w = block_diag(&[p, u]);
                xs.insert(hermitian_part(&(w.adjoint() * &al.c * &w)))
            })
            .collect();
        let yi: Vec<usize> = sb
            .iter()
            .map(|v| {
                let w = block_diag(&[p, v]);
                ys.insert(hermitian_part(&(w.adjoint() * &al.d * &w)))
            })
            .collect();
        for &x in &xi {
            for &y in &yi {
                pairs.insert((x, y));
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
    pairs.sort_unstable();
    RepresentationSet {
        xs: xs.items,
        ys: ys.items,
        pairs,
    }
}

/// `max(sup_x inf_{(x,y)∈Z} f, sup_y inf_{(x,y)∈Z} f)` over index pairs.
pub fn generalized_hausdorff<F>(pairs: &[(usize, usize)], f: F) -> Result<f64>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    if pairs.is_empty() {
        return Err(Error::Dimension("empty representation set".into()));
    }
    let values: Vec<f64> = pairs.par_iter().map(|&(i, j)| f(i, j)).collect::<Result<Vec<f64>>>()?;
    let nx = pairs.iter().map(|p| p.0).max().unwrap_or(0) + 1;
    let ny = pairs.iter().map(|p| p.1).max().unwrap_or(0) + 1;
    let mut inf_x = vec![f64::INFINITY; nx];
    let mut inf_y = vec![f64::INFINITY; ny];
    let mut seen_x = vec![false; nx];
    let mut seen_y = vec![false; ny];
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        inf_x[i] = inf_x[i].min(v);
        inf_y[j] = inf_y[j].min(v);
        seen_x[i] = true;
        seen_y[j] = true;
    }
    let sup = |inf: &[f64], seen: &[bool]| {
        inf.iter()
            .zip(seen)
            .filter(|(_, &s)| s)
            .fold(f64::NEG_INFINITY, |m, (&v, _)| m.max(v))
    };
    Ok(sup(&inf_x, &seen_x).max(sup(&inf_y, &seen_y)))
}

/// `G[i][j] = gd(list[i], list[j])` with a zero diagonal.
pub fn pairwise_gram<T: Scalar>(list: &[PsdMatrix<T>], spec: &MetricSpec, opts: &GdOptions) -> Result<DMatrix<f64>> {
    let n = list.len();
    let jobs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, j)| {
            gd(&list[i], &list[j], spec, opts)
                .map(|r| r.total)
                .map_err(|e| Error::Pair {
                    i,
                    j,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut g = DMatrix::zeros(n, n);
    for (&(i, j), &v) in jobs.iter().zip(&values) {
        g[(i, j)] = v;
    }
    Ok(g)
}
