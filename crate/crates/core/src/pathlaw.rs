//! Finitely supported laws on discrete trajectory spaces: shift, disintegration,
//! reconstruction and a Krylov-type Markov selection.
//!
//! On a finite space, conditioning is only defined on prefixes of positive mass,
//! so every statement "for almost every prefix" becomes "for every prefix with
//! positive probability". Probabilities are `f64`; equality means agreement to
//! [`PROB_TOL`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Result, SceError};
use crate::scheme::{FluidState, Trajectory};
use crate::torus::SpectralField;

pub type Label = String;
pub type Path = Vec<Label>;

pub const PROB_TOL: f64 = 1e-12;

/// Reserved label for the augmentation points with vanishing density and momentum.
pub const VACUUM_LABEL: &str = "vacuum";

#[derive(Debug, Clone, PartialEq)]
pub struct PathLaw {
    steps: usize,
    support: BTreeMap<Path, f64>,
}

impl PathLaw {
    /// Builds a law; duplicate paths are merged and zero-mass paths dropped.
    pub fn new(atoms: Vec<(Path, f64)>) -> Result<Self> {
        let first = atoms.first().ok_or_else(|| SceError::PathLaw("empty support".into()))?;
        if first.0.is_empty() {
            return Err(SceError::PathLaw("paths must contain at least the initial state".into()));
        }
        let steps = first.0.len() - 1;
        let mut support: BTreeMap<Path, f64> = BTreeMap::new();
        let mut total = 0.0;
        for (path, p) in atoms {
            if path.len() != steps + 1 {
                return Err(SceError::PathLaw(format!("path lengths differ ({} vs {})", path.len(), steps + 1)));
            }
            if !(p >= 0.0) || !p.is_finite() {
                return Err(SceError::PathLaw(format!("negative or non-finite probability {p}")));
            }
            if let Some(bad) = path.iter().find(|l| l.is_empty() || l.contains([',', '\n'])) {
                return Err(SceError::PathLaw(format!("invalid label {bad:?}")));
            }
            total += p;
            if p > 0.0 {
                *support.entry(path).or_insert(0.0) += p;
            }
        }
        if (total - 1.0).abs() > PROB_TOL {
            return Err(SceError::PathLaw(format!("probabilities sum to {total}, not 1")));
        }
        Ok(PathLaw { steps, support })
    }

    pub fn delta(path: Path) -> Result<Self> {
        Self::new(vec![(path, 1.0)])
    }

    /// Deterministic law from a string of single-character labels, e.g. `"abc"`.
    pub fn word(w: &str) -> Result<Self> {
        Self::delta(w.chars().map(|c| c.to_string()).collect())
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn support(&self) -> &BTreeMap<Path, f64> {
        &self.support
    }

    pub fn prob(&self, path: &[Label]) -> f64 {
        self.support.get(path).copied().unwrap_or(0.0)
    }

    /// Labels charged at time 0.
    pub fn initial_labels(&self) -> BTreeSet<Label> {
        self.support.keys().map(|p| p[0].clone()).collect()
    }

    pub fn starts_at(&self, y: &str) -> bool {
        self.support.keys().all(|p| p[0] == y)
    }

    fn from_map(steps: usize, support: BTreeMap<Path, f64>) -> Self {
        PathLaw { steps, support: support.into_iter().filter(|(_, p)| *p > 0.0).collect() }
    }

    fn push_forward(&self, steps: usize, f: impl Fn(&Path) -> Path) -> Self {
        let mut out: BTreeMap<Path, f64> = BTreeMap::new();
        for (path, p) in &self.support {
            *out.entry(f(path)).or_insert(0.0) += p;
        }
        Self::from_map(steps, out)
    }

    /// Law of the path from `τ` onward, re-indexed to start at 0.
    pub fn shift(&self, tau: usize) -> Result<Self> {
        if tau > self.steps {
            return Err(SceError::PathLaw(format!("shift {tau} beyond {} steps", self.steps)));
        }
        Ok(self.push_forward(self.steps - tau, |p| p[tau..].to_vec()))
    }

    /// Marginal of the first `n` steps.
    pub fn restrict(&self, n: usize) -> Result<Self> {
        if n > self.steps {
            return Err(SceError::PathLaw(format!("restriction to {n} steps exceeds {}", self.steps)));
        }
        Ok(self.push_forward(n, |p| p[..=n].to_vec()))
    }

    /// Probabilities of the prefixes `ω[0..=T]`.
    pub fn prefix_marginal(&self, t: usize) -> Result<BTreeMap<Path, f64>> {
        Ok(self.restrict(t)?.support)
    }

    /// Conditional continuation laws given each positive-mass prefix `ω[0..=T]`.
    /// Each conditional starts at the prefix endpoint and has `steps − T` steps.
    pub fn disintegrate(&self, t: usize) -> Result<BTreeMap<Path, PathLaw>> {
        if t > self.steps {
            return Err(SceError::PathLaw(format!("disintegration time {t} beyond {} steps", self.steps)));
        }
        let mut groups: BTreeMap<Path, BTreeMap<Path, f64>> = BTreeMap::new();
        for (path, p) in &self.support {
            *groups.entry(path[..=t].to_vec()).or_default().entry(path[t..].to_vec()).or_insert(0.0) += p;
        }
        Ok(groups
            .into_iter()
            .map(|(prefix, cont)| {
                let mass: f64 = cont.values().sum();
                let normalised = cont.into_iter().map(|(k, v)| (k, v / mass)).collect();
                (prefix, PathLaw::from_map(self.steps - t, normalised))
            })
            .collect())
    }

    /// Glues `self` up to time `T` with the kernel `q`.
    pub fn reconstruct(&self, t: usize, q: &BTreeMap<Path, PathLaw>) -> Result<Self> {
        let prefixes = self.prefix_marginal(t)?;
        let mut out: BTreeMap<Path, f64> = BTreeMap::new();
        let mut cont_steps = None;
        for (prefix, mass) in prefixes {
            let kernel = q.get(&prefix).ok_or_else(|| {
                SceError::PathLaw(format!("kernel undefined on positive-mass prefix {}", prefix.join(",")))
            })?;
            let end = prefix.last().expect("prefix nonempty");
            if !kernel.starts_at(end) {
                return Err(SceError::PathLaw(format!(
                    "kernel at prefix {} does not start at its endpoint {end}",
                    prefix.join(",")
                )));
            }
            match cont_steps {
                None => cont_steps = Some(kernel.steps),
                Some(s) if s != kernel.steps => {
                    return Err(SceError::PathLaw("kernel laws have different horizons".into()))
                }
                _ => {}
            }
            for (cont, p) in &kernel.support {
                let mut path = prefix.clone();
                path.extend_from_slice(&cont[1..]);
                *out.entry(path).or_insert(0.0) += mass * p;
            }
        }
        Ok(Self::from_map(t + cont_steps.unwrap_or(0), out))
    }

    /// `λ self + (1 − λ) other`.
    pub fn mixture(&self, lambda: f64, other: &PathLaw) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(SceError::PathLaw(format!("mixture weight {lambda} outside [0, 1]")));
        }
        if self.steps != other.steps {
            return Err(SceError::PathLaw("mixture of laws with different horizons".into()));
        }
        let mut out = BTreeMap::new();
        for (p, w) in &self.support {
            *out.entry(p.clone()).or_insert(0.0) += lambda * w;
        }
        for (p, w) in &other.support {
            *out.entry(p.clone()).or_insert(0.0) += (1.0 - lambda) * w;
        }
        Ok(Self::from_map(self.steps, out))
    }

    /// Agreement of supports with probabilities equal to `tol`.
    pub fn approx_eq(&self, other: &PathLaw, tol: f64) -> bool {
        if self.steps != other.steps {
            return false;
        }
        let keys: BTreeSet<&Path> = self.support.keys().chain(other.support.keys()).collect();
        keys.into_iter().all(|k| (self.prob(k) - other.prob(k)).abs() <= tol)
    }

    /// `E[Σ_t e^{−λ t} f(ξ_t)]` with unit time steps.
    pub fn discounted(&self, lambda: f64, f: &dyn Fn(&str) -> f64) -> f64 {
        self.support
            .iter()
            .map(|(path, p)| p * path.iter().enumerate().map(|(t, l)| (-lambda * t as f64).exp() * f(l)).sum::<f64>())
            .sum()
    }

    /// One path per line, labels comma-separated, probability last.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (path, p) in &self.support {
            let _ = writeln!(out, "{},{:e}", path.join(","), p);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 2 {
                return Err(SceError::Parse(format!("line {}: expected labels followed by a probability", n + 1)));
            }
            let p_text = fields.pop().expect("len >= 2");
            let p: f64 = p_text
                .parse()
                .map_err(|_| SceError::Parse(format!("line {}: bad probability {p_text:?}", n + 1)))?;
            atoms.push((fields.into_iter().map(str::to_string).collect(), p));
        }
        Self::new(atoms)
    }
}

/// Candidate sets `C(y)`, each holding laws that start at `y`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateMap {
    sets: BTreeMap<Label, Vec<PathLaw>>,
}

impl CandidateMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, y: &str, law: PathLaw) -> Result<()> {
        if !law.starts_at(y) {
            return Err(SceError::PathLaw(format!("candidate for {y} does not start at {y}")));
        }
        if let Some(first) = self.sets.values().flat_map(|v| v.first()).next() {
            if first.steps != law.steps {
                return Err(SceError::PathLaw("candidate laws must share one horizon".into()));
            }
        }
        let set = self.sets.entry(y.to_string()).or_default();
        if !set.iter().any(|l| l.approx_eq(&law, PROB_TOL)) {
            set.push(law);
        }
        Ok(())
    }

    /// Stores `λ C(y)[i] + (1 − λ) C(y)[j]` as an additional candidate.
    pub fn add_mixture(&mut self, y: &str, i: usize, j: usize, lambda: f64) -> Result<()> {
        let set = self.sets.get(y).ok_or_else(|| SceError::PathLaw(format!("no candidates at {y}")))?;
        let (a, b) = (
            set.get(i).ok_or_else(|| SceError::PathLaw(format!("no candidate {i} at {y}")))?,
            set.get(j).ok_or_else(|| SceError::PathLaw(format!("no candidate {j} at {y}")))?,
        );
        let mix = a.mixture(lambda, b)?;
        self.insert(y, mix)
    }

    pub fn get(&self, y: &str) -> Option<&[PathLaw]> {
        self.sets.get(y).map(Vec::as_slice)
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.sets.keys()
    }

    pub fn sets(&self) -> &BTreeMap<Label, Vec<PathLaw>> {
        &self.sets
    }

    pub fn steps(&self) -> usize {
        self.sets.values().flat_map(|v| v.first()).next().map_or(0, |l| l.steps)
    }

    fn restricted(&self, z: &str, n: usize) -> Result<Vec<PathLaw>> {
        let set = self
            .sets
            .get(z)
            .ok_or_else(|| SceError::PathLaw(format!("disintegration: state {z} is reached but has no candidate set")))?;
        set.iter().map(|l| l.restrict(n)).collect()
    }

    /// Verifies the disintegration and reconstruction closure properties.
    pub fn check_closure(&self) -> Result<()> {
        let n = self.steps();
        for (y, set) in &self.sets {
            if set.is_empty() {
                return Err(SceError::PathLaw(format!("C({y}) is empty")));
            }
            for law in set {
                for tau in 1..=n {
                    let conds = law.disintegrate(tau)?;
                    let mut options: Vec<(Path, Vec<PathLaw>)> = Vec::new();
                    for (prefix, cond) in &conds {
                        let z = prefix.last().expect("prefix nonempty");
                        let allowed = self.restricted(z, n - tau)?;
                        if !allowed.iter().any(|a| a.approx_eq(cond, PROB_TOL)) {
                            return Err(SceError::PathLaw(format!(
                                "disintegration property violated: C({y}) conditioned on {} at time {tau} leaves C({z})",
                                prefix.join(",")
                            )));
                        }
                        options.push((prefix.clone(), allowed));
                    }
                    // every kernel built from restricted candidates must glue back into C(y)
                    let mut idx = vec![0usize; options.len()];
                    loop {
                        let kernel: BTreeMap<Path, PathLaw> =
                            options.iter().zip(&idx).map(|((p, o), &i)| (p.clone(), o[i].clone())).collect();
                        let glued = law.reconstruct(tau, &kernel)?;
                        if !set.iter().any(|c| c.approx_eq(&glued, PROB_TOL)) {
                            let desc: Vec<String> = kernel
                                .iter()
                                .map(|(p, q)| format!("{} -> {}", p.join(","), q.to_text().trim().replace('\n', " | ")))
                                .collect();
                            return Err(SceError::PathLaw(format!(
                                "reconstruction property violated: gluing a member of C({y}) at time {tau} with [{}] leaves C({y})",
                                desc.join("; ")
                            )));
                        }
                        let mut k = 0;
                        while k < idx.len() {
                            idx[k] += 1;
                            if idx[k] < options[k].1.len() {
                                break;
                            }
                            idx[k] = 0;
                            k += 1;
                        }
                        if k == idx.len() {
                            break;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

pub type Selection = BTreeMap<Label, PathLaw>;

/// Exact finite-horizon Markov check: the conditional of `sel(y)` given any
/// positive-mass prefix ending at `z` at time `τ` equals `sel(z)` restricted to
/// the remaining `n − τ` steps.
pub fn check_markov(sel: &Selection) -> Result<()> {
    for (y, law) in sel {
        let n = law.steps();
        for tau in 1..=n {
            for (prefix, cond) in law.disintegrate(tau)? {
                let z = prefix.last().expect("prefix nonempty");
                let target = sel
                    .get(z)
                    .ok_or_else(|| SceError::PathLaw(format!("Markov check: no selected law at {z}")))?
                    .restrict(n - tau)?;
                if !cond.approx_eq(&target, PROB_TOL) {
                    return Err(SceError::PathLaw(format!(
                        "Markov property fails for P_{y} at time {tau} after prefix {}",
                        prefix.join(",")
                    )));
                }
            }
        }
    }
    Ok(())
}

pub fn is_markov(sel: &Selection) -> bool {
    check_markov(sel).is_ok()
}

/// One selection criterion `E[Σ_t e^{−λ t} f(ξ_t)]`.
pub struct Functional<'a> {
    pub discount: f64,
    pub f: Box<dyn Fn(&str) -> f64 + 'a>,
}

impl<'a> Functional<'a> {
    pub fn new(discount: f64, f: impl Fn(&str) -> f64 + 'a) -> Self {
        Functional { discount, f: Box::new(f) }
    }
}

/// Indices of the maximisers of `value` within `candidates`, ties within `PROB_TOL`.
fn argmax(candidates: &[usize], value: impl Fn(usize) -> f64) -> Vec<usize> {
    let vals: Vec<f64> = candidates.iter().map(|&i| value(i)).collect();
    let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    candidates.iter().zip(&vals).filter(|(_, &v)| v >= best - PROB_TOL).map(|(&i, _)| i).collect()
}

/// Refines each `C(y)` through the functionals in order, breaks remaining ties by the
/// lexicographically smallest serialisation, and verifies the Markov property.
pub fn krylov_select(candidates: &CandidateMap, functionals: &[Functional<'_>]) -> Result<Selection> {
    candidates.check_closure()?;
    let sel = krylov_select_unchecked(candidates, functionals)?;
    check_markov(&sel)?;
    Ok(sel)
}

/// The refinement alone, without closure or Markov verification.
pub fn krylov_select_unchecked(candidates: &CandidateMap, functionals: &[Functional<'_>]) -> Result<Selection> {
    let mut out = Selection::new();
    for (y, set) in candidates.sets() {
        let mut alive: Vec<usize> = (0..set.len()).collect();
        for fnl in functionals {
            alive = argmax(&alive, |i| set[i].discounted(fnl.discount, fnl.f.as_ref()));
        }
        let pick = alive
            .into_iter()
            .min_by(|&a, &b| set[a].to_text().cmp(&set[b].to_text()))
            .ok_or_else(|| SceError::PathLaw(format!("C({y}) is empty")))?;
        out.insert(y.clone(), set[pick].clone());
    }
    Ok(out)
}

/// Every selection `y ↦ C(y)[i_y]`.
pub fn all_selections(candidates: &CandidateMap) -> Vec<Selection> {
    let labels: Vec<&Label> = candidates.labels().collect();
    let sizes: Vec<usize> = labels.iter().map(|y| candidates.get(y).map_or(0, <[PathLaw]>::len)).collect();
    if sizes.iter().any(|&s| s == 0) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; labels.len()];
    loop {
        out.push(labels.iter().zip(&idx).map(|(y, &i)| ((*y).clone(), candidates.get(y).expect("present")[i].clone())).collect());
        let mut k = 0;
        while k < idx.len() {
            idx[k] += 1;
            if idx[k] < sizes[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == idx.len() {
            break;
        }
    }
    out
}

/// `d_F`: `L²` distances of `ρ`, `m`, `S` plus `‖m/√ρ − m'/√ρ'‖_{L²}` on a shared grid.
pub fn d_f(a: &FluidState, b: &FluidState) -> Result<f64> {
    a.grid().check_same(b.grid())?;
    let grid = a.grid();
    let dv = grid.cell_volume();
    let l2 = |x: &SpectralField, y: &SpectralField| -> f64 {
        x.physical().iter().zip(y.physical()).map(|(p, q)| (p - q).powi(2)).sum::<f64>().mul_add(dv, 0.0).sqrt()
    };
    let mut mom = 0.0;
    let mut kin = 0.0;
    for i in 0..grid.len() {
        let (ma, mb) = (a.mom.at(i), b.mom.at(i));
        let (ra, rb) = (a.rho.physical()[i].abs().sqrt(), b.rho.physical()[i].abs().sqrt());
        for c in 0..grid.dim() {
            mom += (ma[c] - mb[c]).powi(2);
            kin += (ma[c] / ra - mb[c] / rb).powi(2);
        }
    }
    Ok(l2(&a.rho, &b.rho) + (mom * dv).sqrt() + l2(&a.entropy, &b.entropy) + (kin * dv).sqrt())
}

/// Labels solver snapshots by greedy `d_F`-ball quantisation.
#[derive(Debug, Clone, Default)]
pub struct Alphabet {
    pub radius: f64,
    centres: Vec<(Label, FluidState)>,
}

impl Alphabet {
    pub fn new(radius: f64) -> Self {
        Alphabet { radius, centres: Vec::new() }
    }

    /// Label of the first centre within `radius`, or a fresh label `q<i>`.
    pub fn assign(&mut self, state: &FluidState) -> Result<Label> {
        if state.rho.max_abs() == 0.0 && state.mom.max_abs() == 0.0 {
            return Ok(VACUUM_LABEL.to_string());
        }
        for (label, c) in &self.centres {
            if d_f(c, state)? <= self.radius {
                return Ok(label.clone());
            }
        }
        let label = format!("q{}", self.centres.len());
        self.centres.push((label.clone(), state.clone()));
        Ok(label)
    }

    pub fn len(&self) -> usize {
        self.centres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centres.is_empty()
    }

    pub fn centre(&self, label: &str) -> Option<&FluidState> {
        self.centres.iter().find(|(l, _)| l == label).map(|(_, s)| s)
    }
}

/// Empirical law of quantised snapshot sequences, uniform over trajectories.
pub fn empirical_law(paths: &[Trajectory], snapshot_idx: &[usize], alphabet: &mut Alphabet) -> Result<PathLaw> {
    if paths.is_empty() || snapshot_idx.is_empty() {
        return Err(SceError::PathLaw("empirical law needs trajectories and snapshot indices".into()));
    }
    let w = 1.0 / paths.len() as f64;
    let mut atoms = Vec::with_capacity(paths.len());
    for t in paths {
        let mut path = Vec::with_capacity(snapshot_idx.len());
        for &i in snapshot_idx {
            let s = t.states.get(i).ok_or_else(|| SceError::PathLaw(format!("snapshot {i} missing")))?;
            path.push(alphabet.assign(s)?);
        }
        atoms.push((path, w));
    }
    // renormalise against rounding of n · (1/n)
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    for a in &mut atoms {
        a.1 /= total;
    }
    PathLaw::new(atoms)
}

fn word_map(sets: &[(&str, &[&str])]) -> CandidateMap {
    let mut map = CandidateMap::new();
    for (y, words) in sets {
        for w in *words {
            map.insert(y, PathLaw::word(w).expect("valid toy word")).expect("toy word starts at its label");
        }
    }
    map
}

/// Three states `a, b, c` over three steps, with `c` absorbing and jumps only forward.
/// The family satisfies both closure properties; it has 12 selections, several of them
/// Markov, and the preference `f(c) > f(b) > f(a)` singles out `(abc, bcc, ccc)`.
pub fn closed_toy() -> CandidateMap {
    word_map(&[("a", &["aaa", "aab", "abb", "abc"]), ("b", &["bbb", "bbc", "bcc"]), ("c", &["ccc"])])
}

/// Two states over two steps, two candidates each, with exactly one Markov
/// selection `(aba, bab)`. The family is not closed under disintegration.
pub fn open_toy() -> CandidateMap {
    word_map(&[("a", &["aab", "aba"]), ("b", &["bbb", "bab"])])
}

/// The preference used with [`closed_toy`].
pub fn closed_toy_preference(label: &str) -> f64 {
    match label {
        "c" => 1.0,
        "b" => 0.5,
        _ => 0.0,
    }
}
