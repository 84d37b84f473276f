//! Differential evolution (rand/1/bin) over mixed integer, simplex and real
//! genes, with an evaluation cache, a budget and resumable checkpoints.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A contiguous run of genes sharing one constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    /// Rounded to integers and clipped to `[lo, hi]`.
    Integer { len: usize, lo: i64, hi: i64 },
    /// Projected onto the probability simplex.
    Simplex { len: usize },
    /// Clipped to `[lo, hi]`.
    Real { len: usize, lo: f64, hi: f64 },
}

impl Segment {
    pub fn len(&self) -> usize {
        match *self {
            Segment::Integer { len, .. } | Segment::Simplex { len } | Segment::Real { len, .. } => len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneLayout {
    pub segments: Vec<Segment>,
}

impl GeneLayout {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    pub fn dim(&self) -> usize {
        self.segments.iter().map(Segment::len).sum()
    }

    /// Maps an arbitrary real vector onto the feasible set.
    pub fn repair(&self, x: &mut [f64]) {
        let mut off = 0;
        for seg in &self.segments {
            let part = &mut x[off..off + seg.len()];
            match *seg {
                Segment::Integer { lo, hi, .. } => {
                    for v in part.iter_mut() {
                        *v = v.round().clamp(lo as f64, hi as f64);
                    }
                }
                Segment::Simplex { .. } => project_simplex(part),
                Segment::Real { lo, hi, .. } => {
                    for v in part.iter_mut() {
                        *v = v.clamp(lo, hi);
                    }
                }
            }
            off += seg.len();
        }
    }

    /// Uniform draw from the feasible set.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        for seg in &self.segments {
            match *seg {
                Segment::Integer { len, lo, hi } => {
                    x.extend((0..len).map(|_| rng.random_range(lo..=hi) as f64));
                }
                Segment::Simplex { len } => {
                    // normalised exponentials are uniform on the simplex
                    let e: Vec<f64> = (0..len).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                    let s: f64 = e.iter().sum();
                    x.extend(e.iter().map(|v| v / s));
                }
                Segment::Real { len, lo, hi } => {
                    x.extend((0..len).map(|_| rng.random_range(lo..=hi)));
                }
            }
        }
        x
    }
}

/// Euclidean projection onto `{x >= 0, sum x = 1}`.
pub fn project_simplex(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let mut u: Vec<f64> = x.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    for v in x.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genes: Vec<f64>,
    /// Infeasible candidates carry `+inf`, stored as `null`.
    #[serde(with = "fitness_json")]
    pub fitness: f64,
}

mod fitness_json {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        v.is_finite().then_some(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub f: f64,
    pub cr: f64,
    /// Defaults to ten times the gene count.
    pub pop_size: Option<usize>,
    pub max_generations: usize,
    /// Maximum fitness evaluations, cache hits excluded.
    pub budget: Option<usize>,
    pub seed: u64,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        Self {
            f: 0.5,
            cr: 0.9,
            pop_size: None,
            max_generations: 100,
            budget: None,
            seed: 0,
        }
    }
}

fn gene_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// Trial vectors of one rand/1/bin generation, already repaired.
pub fn make_trials<R: Rng + ?Sized>(
    population: &[Individual],
    layout: &GeneLayout,
    f: f64,
    cr: f64,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let np = population.len();
    if np < 4 {
        return Err(Error::Optimizer(format!("population of {np} is below 4")));
    }
    let dim = layout.dim();
    let mut trials = Vec::with_capacity(np);
    for i in 0..np {
        let mut pick = |exclude: &[usize]| loop {
            let k = rng.random_range(0..np);
            if !exclude.contains(&k) {
                break k;
            }
        };
        let a = pick(&[i]);
        let b = pick(&[i, a]);
        let c = pick(&[i, a, b]);
        let forced = rng.random_range(0..dim);
        let (xa, xb, xc) = (&population[a].genes, &population[b].genes, &population[c].genes);
        let mut trial = population[i].genes.clone();
        for j in 0..dim {
            if j == forced || rng.random::<f64>() < cr {
                trial[j] = xa[j] + f * (xb[j] - xc[j]);
            }
        }
        layout.repair(&mut trial);
        trials.push(trial);
    }
    Ok(trials)
}

/// One generation: mutation, crossover, repair and greedy selection.
///
/// A trial replaces its target when its fitness is finite and no worse.
pub fn de_generation<R: Rng + ?Sized>(
    population: &[Individual],
    layout: &GeneLayout,
    f: f64,
    cr: f64,
    rng: &mut R,
    cost: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<Vec<Individual>> {
    let trials = make_trials(population, layout, f, cr, rng)?;
    let fits: Vec<f64> = trials.par_iter().map(|t| cost(t)).collect();
    Ok(select(population, trials, &fits))
}

fn select(population: &[Individual], trials: Vec<Vec<f64>>, fits: &[f64]) -> Vec<Individual> {
    population
        .iter()
        .zip(trials)
        .zip(fits)
        .map(|((old, genes), &fitness)| {
            if fitness.is_finite() && fitness <= old.fitness {
                Individual { genes, fitness }
            } else {
                old.clone()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RngState {
    seed: String,
    stream: u64,
    word_pos: String,
}

/// Versioned optimiser snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub generation: usize,
    pub evaluations: usize,
    pub layout: GeneLayout,
    pub params: EvolutionParams,
    pub population: Vec<Individual>,
    rng: RngState,
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Cache-only generations tolerated before [`Evolution::run`] gives up.
pub const IDLE_LIMIT: usize = 50;

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let tmp = path.as_ref().with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(self)?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cp: Checkpoint = serde_json::from_slice(&std::fs::read(path)?)?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(Error::Optimizer(format!(
                "checkpoint version {} unsupported (expected {CHECKPOINT_VERSION})",
                cp.version
            )));
        }
        Ok(cp)
    }
}

/// Stateful optimiser; the cost function is supplied per call so that
/// non-serialisable evaluators survive checkpointing.
#[derive(Debug, Clone)]
pub struct Evolution {
    layout: GeneLayout,
    params: EvolutionParams,
    population: Vec<Individual>,
    rng: ChaCha8Rng,
    cache: HashMap<Vec<u64>, f64>,
    evaluations: usize,
    generation: usize,
    /// Consecutive generations answered entirely from the cache.
    idle: usize,
    /// Best fitness after each generation, initial population first.
    pub history: Vec<f64>,
}

impl Evolution {
    pub fn new(layout: GeneLayout, params: EvolutionParams) -> Result<Self> {
        if layout.dim() == 0 {
            return Err(Error::Optimizer("empty genome".into()));
        }
        if !(params.f >= 0.0 && (0.0..=1.0).contains(&params.cr)) {
            return Err(Error::Optimizer("F must be >= 0 and CR in [0, 1]".into()));
        }
        Ok(Self {
            layout,
            params,
            population: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            cache: HashMap::new(),
            evaluations: 0,
            generation: 0,
            idle: 0,
            history: Vec::new(),
        })
    }

    /// Generator driving mutation and sampling.
    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn pop_size(&self) -> usize {
        self.params.pop_size.unwrap_or(10 * self.layout.dim())
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    /// Consecutive generations that produced no unseen candidate.
    pub fn idle(&self) -> usize {
        self.idle
    }

    pub fn best(&self) -> Option<&Individual> {
        self.population.iter().min_by(|a, b| a.fitness.total_cmp(&b.fitness))
    }

    fn budget_left(&self) -> usize {
        self.params
            .budget
            .map_or(usize::MAX, |b| b.saturating_sub(self.evaluations))
    }

    /// Evaluates through the cache; candidates beyond the budget get `+inf`.
    fn evaluate(&mut self, xs: &[Vec<f64>], cost: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Vec<f64> {
        let mut fresh: Vec<usize> = Vec::new();
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        for (i, x) in xs.iter().enumerate() {
            let key = gene_key(x);
            if !self.cache.contains_key(&key) && !seen.contains_key(&key) {
                seen.insert(key, i);
                fresh.push(i);
            }
        }
        fresh.truncate(self.budget_left());
        self.idle = if fresh.is_empty() { self.idle + 1 } else { 0 };
        let values: Vec<f64> = fresh.par_iter().map(|&i| cost(&xs[i])).collect();
        self.evaluations += fresh.len();
        for (&i, &v) in fresh.iter().zip(&values) {
            self.cache.insert(gene_key(&xs[i]), v);
        }
        xs.iter()
            .map(|x| *self.cache.get(&gene_key(x)).unwrap_or(&f64::INFINITY))
            .collect()
    }

    /// Samples and evaluates the initial population.
    pub fn initialise(&mut self, cost: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<()> {
        let np = self.pop_size();
        let xs: Vec<Vec<f64>> = (0..np).map(|_| self.layout.sample(&mut self.rng)).collect();
        self.initialise_from(xs, cost)
    }

    /// Evaluates a caller-supplied initial population (repaired first).
    pub fn initialise_from(&mut self, mut xs: Vec<Vec<f64>>, cost: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<()> {
        if xs.len() < 4 {
            return Err(Error::Optimizer(format!("population of {} is below 4", xs.len())));
        }
        if xs.iter().any(|x| x.len() != self.layout.dim()) {
            return Err(Error::Optimizer("initial genome of wrong length".into()));
        }
        for x in &mut xs {
            self.layout.repair(x);
        }
        let fits = self.evaluate(&xs, cost);
        self.population = xs
            .into_iter()
            .zip(fits)
            .map(|(genes, fitness)| Individual { genes, fitness })
            .collect();
        self.history.push(self.best().map_or(f64::INFINITY, |b| b.fitness));
        Ok(())
    }

    /// Seeds part of the initial population with known candidates.
    pub fn inject(&mut self, genes: Vec<f64>, cost: &(dyn Fn(&[f64]) -> f64 + Sync)) {
        let mut g = genes;
        self.layout.repair(&mut g);
        let fit = self.evaluate(std::slice::from_ref(&g), cost)[0];
        if let Some(worst) = self
            .population
            .iter_mut()
            .max_by(|a, b| a.fitness.total_cmp(&b.fitness))
        {
            if fit <= worst.fitness {
                *worst = Individual { genes: g, fitness: fit };
            }
        }
    }

    /// One generation. Returns false once the budget is spent.
    pub fn step(&mut self, cost: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<bool> {
        if self.population.is_empty() {
            self.initialise(cost)?;
            return Ok(self.budget_left() > 0);
        }
        if self.budget_left() == 0 {
            return Ok(false);
        }
        let trials = make_trials(
            &self.population,
            &self.layout,
            self.params.f,
            self.params.cr,
            &mut self.rng,
        )?;
        let fits = self.evaluate(&trials, cost);
        self.population = select(&self.population, trials, &fits);
        self.generation += 1;
        self.history.push(self.best().map_or(f64::INFINITY, |b| b.fitness));
        Ok(self.budget_left() > 0)
    }

    /// Runs until `max_generations`, the budget is exhausted or
    /// [`IDLE_LIMIT`] generations in a row produce no unseen candidate.
    pub fn run(&mut self, cost: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<Individual> {
        if self.population.is_empty() {
            self.initialise(cost)?;
        }
        while self.generation < self.params.max_generations && self.idle < IDLE_LIMIT && self.step(cost)? {}
        self.best()
            .cloned()
            .ok_or_else(|| Error::Optimizer("empty population".into()))
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            generation: self.generation,
            evaluations: self.evaluations,
            layout: self.layout.clone(),
            params: self.params,
            population: self.population.clone(),
            rng: RngState {
                seed: hex::encode(self.rng.get_seed()),
                stream: self.rng.get_stream(),
                word_pos: self.rng.get_word_pos().to_string(),
            },
        }
    }

    /// Restores a snapshot; the cache is rebuilt from the population.
    pub fn resume(cp: Checkpoint) -> Result<Self> {
        let bad = |m: &str| Error::Optimizer(format!("corrupt checkpoint: {m}"));
        let seed: [u8; 32] = hex::decode(&cp.rng.seed)
            .map_err(|_| bad("seed"))?
            .try_into()
            .map_err(|_| bad("seed length"))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(cp.rng.stream);
        rng.set_word_pos(cp.rng.word_pos.parse::<u128>().map_err(|_| bad("word_pos"))?);
        let cache = cp
            .population
            .iter()
            .map(|ind| (gene_key(&ind.genes), ind.fitness))
            .collect();
        let best = cp.population.iter().map(|i| i.fitness).fold(f64::INFINITY, f64::min);
        Ok(Self {
            layout: cp.layout,
            params: cp.params,
            population: cp.population,
            rng,
            cache,
            evaluations: cp.evaluations,
            generation: cp.generation,
            idle: 0,
            history: vec![best],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn real_layout(n: usize) -> GeneLayout {
        GeneLayout::new(vec![Segment::Real {
            len: n,
            lo: -5.0,
            hi: 5.0,
        }])
    }

    fn pop(xs: &[&[f64]]) -> Vec<Individual> {
        xs.iter()
            .map(|x| Individual {
                genes: x.to_vec(),
                fitness: sphere(x),
            })
            .collect()
    }

    #[test]
    fn zero_f_copies_base_vector() {
        let p = pop(&[&[1.0, 1.0], &[2.0, 2.0], &[3.0, 3.0], &[4.0, 4.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trials = make_trials(&p, &real_layout(2), 0.0, 1.0, &mut rng).unwrap();
        for (i, t) in trials.iter().enumerate() {
            assert!(p.iter().enumerate().any(|(k, ind)| k != i && ind.genes == *t));
        }
    }

    #[test]
    fn full_crossover_takes_mutant() {
        let p = pop(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trials = make_trials(&p, &real_layout(2), 0.5, 1.0, &mut rng).unwrap();
        // every trial is x_a + 0.5 (x_b - x_c) on both genes: a multiple of 0.5
        for (i, t) in trials.iter().enumerate() {
            assert!(t.iter().all(|v| (v * 2.0).fract() == 0.0));
            assert_ne!(*t, p[i].genes);
        }
    }

    #[test]
    fn small_population_rejected() {
        let p = pop(&[&[0.0], &[1.0], &[2.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(make_trials(&p, &real_layout(1), 0.5, 0.9, &mut rng).is_err());
    }

    #[test]
    fn sphere_function_converges() {
        let mut evo = Evolution::new(
            real_layout(10),
            EvolutionParams {
                max_generations: 200,
                seed: 5,
                ..Default::default()
            },
        )
        .unwrap();
        let best = evo.run(&sphere).unwrap();
        assert!(best.fitness < 1e-3, "{}", best.fitness);
        assert!(evo.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn budget_of_one_population_returns_initial_best() {
        let params = EvolutionParams {
            pop_size: Some(12),
            budget: Some(12),
            seed: 9,
            ..Default::default()
        };
        let mut evo = Evolution::new(real_layout(3), params).unwrap();
        let best = evo.run(&sphere).unwrap();
        assert_eq!(evo.evaluations(), 12);
        assert_eq!(evo.generation(), 0);
        let min = evo.population().iter().map(|i| i.fitness).fold(f64::INFINITY, f64::min);
        assert_eq!(best.fitness, min);
    }

    #[test]
    fn repair_respects_constraints() {
        let layout = GeneLayout::new(vec![
            Segment::Integer { len: 3, lo: 0, hi: 3 },
            Segment::Simplex { len: 2 },
        ]);
        let mut x = vec![-0.7, 2.6, 9.0, 0.9, 0.6];
        layout.repair(&mut x);
        assert_eq!(&x[..3], &[0.0, 3.0, 3.0]);
        assert!((x[3] - 0.65).abs() < 1e-12 && (x[4] - 0.35).abs() < 1e-12);
        let mut y = vec![0.0, 0.0, 0.0, -1.0, 3.0];
        layout.repair(&mut y);
        assert_eq!(&y[3..], &[0.0, 1.0]);
    }

    #[test]
    fn checkpoint_resume_is_exact() {
        let params = EvolutionParams {
            pop_size: Some(20),
            max_generations: 6,
            seed: 4,
            ..Default::default()
        };
        let mut a = Evolution::new(real_layout(4), params).unwrap();
        a.initialise(&sphere).unwrap();
        for _ in 0..3 {
            a.step(&sphere).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.json");
        a.checkpoint().save(&path).unwrap();
        let mut b = Evolution::resume(Checkpoint::load(&path).unwrap()).unwrap();
        for _ in 0..3 {
            a.step(&sphere).unwrap();
            b.step(&sphere).unwrap();
        }
        assert_eq!(a.population(), b.population());
    }

    #[test]
    fn invalid_candidates_never_selected() {
        let cost = |x: &[f64]| if x[0] > 0.0 { f64::INFINITY } else { sphere(x) };
        let mut evo = Evolution::new(
            real_layout(2),
            EvolutionParams {
                pop_size: Some(10),
                max_generations: 20,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        evo.run(&cost).unwrap();
        assert!(evo
            .population()
            .iter()
            .all(|i| i.genes[0] <= 0.0 || i.fitness.is_infinite()));
    }
}
