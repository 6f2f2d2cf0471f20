//! Generational evolution loop: elitism, tournament selection, subtree
//! crossover and mutation, with per-generation logging.

use crate::error::Result;
use crate::genetics::{
    init_population, subtree_crossover, subtree_mutation, tournament_select, Individual,
};
use crate::primitives::{default_frequency_grid, Registry};
use crate::rng::StreamId;
use crate::tree::GenotypeTree;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// All run parameters of the search itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elitism_rate: f64,
    pub tournament_size: usize,
    pub init_depth_min: usize,
    pub init_depth_max: usize,
    pub max_depth: usize,
    pub seed: u64,
    /// Train-phase cascade nodes append out-of-fold predictions.
    pub cascade_oof: bool,
    pub crossover_retry_limit: usize,
    /// Gabor frequency terminal grid.
    pub frequency_grid: Vec<f64>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 100,
            generations: 50,
            crossover_rate: 0.5,
            mutation_rate: 0.49,
            elitism_rate: 0.01,
            tournament_size: 5,
            init_depth_min: 2,
            init_depth_max: 10,
            max_depth: 10,
            seed: 1,
            cascade_oof: true,
            crossover_retry_limit: 10,
            frequency_grid: default_frequency_grid(),
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        use crate::error::EdlgpError::Config;
        if self.population_size == 0 {
            return Err(Config("population_size must be positive".into()));
        }
        let rates = [self.crossover_rate, self.mutation_rate, self.elitism_rate];
        if rates.iter().any(|&r| r < 0.0) {
            return Err(Config("rates must be nonnegative".into()));
        }
        let sum: f64 = rates.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Config(format!("rates must sum to 1, got {sum}")));
        }
        if self.tournament_size == 0 {
            return Err(Config("tournament_size must be positive".into()));
        }
        if self.init_depth_min < 2
            || self.init_depth_min > self.init_depth_max
            || self.init_depth_max > self.max_depth
        {
            return Err(Config(format!(
                "need 2 <= init_depth_min <= init_depth_max <= max_depth, got {} <= {} <= {}",
                self.init_depth_min, self.init_depth_max, self.max_depth
            )));
        }
        if self.frequency_grid.is_empty() {
            return Err(Config("frequency_grid must not be empty".into()));
        }
        Ok(())
    }
}

/// One row of the per-generation log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub mean_tree_size: f64,
    pub best_tree_size: usize,
    /// Wall-clock seconds since the start of the run; observability only.
    pub elapsed_s: f64,
}

pub struct EvolveOutcome {
    pub best: Individual,
    pub log: Vec<GenerationStats>,
}

/// Index of the best individual: highest fitness, ties to the smaller
/// tree, then the earlier index.
fn best_index(pop: &[Individual]) -> usize {
    let mut best = 0;
    for (i, ind) in pop.iter().enumerate().skip(1) {
        let (bf, bs) = (pop[best].fitness.unwrap(), pop[best].size());
        let (f, s) = (ind.fitness.unwrap(), ind.size());
        if f > bf || (f == bf && s < bs) {
            best = i;
        }
    }
    best
}

/// Offspring counts from the rates: elites round to at least 1, the
/// crossover count rounds down to an even number, mutation takes the
/// remainder.
fn breeding_plan(config: &EvolutionConfig) -> (usize, usize, usize) {
    let n = config.population_size;
    let mut elites = ((config.elitism_rate * n as f64).round() as usize).max(1).min(n);
    let mut crossover = (config.crossover_rate * n as f64).round() as usize;
    if crossover % 2 == 1 {
        crossover -= 1;
    }
    while elites + crossover > n {
        if crossover >= 2 {
            crossover -= 2;
        } else {
            elites = n - crossover;
        }
    }
    let mutation = n - elites - crossover;
    (elites, crossover, mutation)
}

/// Run the generational loop. `fitness_fn` receives the genotype and a
/// stream derived from (seed, generation, index); it must be deterministic
/// in those inputs for runs to reproduce. Failures are logged and score 0.
/// `before_generation` runs before each generation's evaluation pass
/// (callers use it to reset per-generation caches).
pub fn evolve<F, H>(
    reg: &Registry,
    config: &EvolutionConfig,
    parallel: usize,
    before_generation: H,
    fitness_fn: F,
) -> Result<EvolveOutcome>
where
    F: Fn(&GenotypeTree, StreamId) -> Result<f64> + Sync,
    H: Fn(usize),
{
    config.validate()?;
    let root = StreamId::new(config.seed);
    let start = Instant::now();

    let mut population = init_population(
        reg,
        config.population_size,
        config.init_depth_min,
        config.init_depth_max,
        root.child("init"),
    );

    let evaluate = |pop: &mut [Individual], gen: usize| -> Result<()> {
        let eval_stream = root.child("eval").child_u64(gen as u64);
        let jobs: Vec<(usize, &GenotypeTree)> = pop
            .iter()
            .enumerate()
            .filter(|(_, ind)| ind.fitness.is_none())
            .map(|(i, ind)| (i, &ind.genotype))
            .collect();
        let run_one = |(i, genotype): &(usize, &GenotypeTree)| -> (usize, f64) {
            let stream = eval_stream.child_u64(*i as u64);
            match fitness_fn(genotype, stream) {
                Ok(f) => (*i, f),
                Err(e) => {
                    log::warn!("generation {gen}, individual {i}: fitness failed: {e}");
                    (*i, 0.0)
                }
            }
        };
        let results: Vec<(usize, f64)> = if parallel > 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(parallel)
                .build()
                .map_err(|e| crate::error::EdlgpError::Internal(e.to_string()))?;
            pool.install(|| jobs.par_iter().map(run_one).collect())
        } else {
            jobs.iter().map(run_one).collect()
        };
        for (i, f) in results {
            pop[i].fitness = Some(f);
        }
        Ok(())
    };

    if config.generations == 0 {
        before_generation(0);
        evaluate(&mut population, 0)?;
        let best = population[best_index(&population)].clone();
        return Ok(EvolveOutcome { best, log: Vec::new() });
    }

    let mut log = Vec::with_capacity(config.generations);
    let mut best_ever: Option<Individual> = None;

    for gen in 0..config.generations {
        before_generation(gen);
        evaluate(&mut population, gen)?;

        let gen_best = best_index(&population);
        let n = population.len() as f64;
        let stats = GenerationStats {
            generation: gen,
            best_fitness: population[gen_best].fitness.unwrap(),
            mean_fitness: population.iter().map(|i| i.fitness.unwrap()).sum::<f64>() / n,
            mean_tree_size: population.iter().map(|i| i.size() as f64).sum::<f64>() / n,
            best_tree_size: population[gen_best].size(),
            elapsed_s: start.elapsed().as_secs_f64(),
        };
        log.push(stats);

        let candidate = &population[gen_best];
        if best_ever.as_ref().map_or(true, |b| candidate.fitness > b.fitness) {
            best_ever = Some(candidate.clone());
        }

        if gen + 1 < config.generations {
            population = next_generation(reg, config, &population, root.child("breed").child_u64(gen as u64))?;
        }
    }

    Ok(EvolveOutcome { best: best_ever.unwrap(), log })
}

fn next_generation(
    reg: &Registry,
    config: &EvolutionConfig,
    population: &[Individual],
    stream: StreamId,
) -> Result<Vec<Individual>> {
    let (n_elites, n_crossover, n_mutation) = breeding_plan(config);
    let mut rng = stream.rng();
    let mut next = Vec::with_capacity(population.len());

    // Elites, best-first (fitness desc, size asc, index asc), keep fitness.
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&a, &b| {
        let ia = &population[a];
        let ib = &population[b];
        ib.fitness
            .unwrap()
            .partial_cmp(&ia.fitness.unwrap())
            .unwrap()
            .then(ia.size().cmp(&ib.size()))
            .then(a.cmp(&b))
    });
    for &i in order.iter().take(n_elites) {
        next.push(population[i].clone());
    }

    for _ in 0..n_crossover / 2 {
        let pa = tournament_select(population, config.tournament_size, &mut rng)?;
        let pb = tournament_select(population, config.tournament_size, &mut rng)?;
        let (ca, cb) = subtree_crossover(
            reg,
            &pa.genotype,
            &pb.genotype,
            config.max_depth,
            config.crossover_retry_limit,
            &mut rng,
        );
        next.push(Individual::new(ca));
        next.push(Individual::new(cb));
    }

    for _ in 0..n_mutation {
        let p = tournament_select(population, config.tournament_size, &mut rng)?;
        next.push(Individual::new(subtree_mutation(reg, &p.genotype, config.max_depth, &mut rng)));
    }

    debug_assert_eq!(next.len(), population.len());
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::register_primitives;
    use crate::sexpr;

    fn reg() -> Registry {
        register_primitives(1, 2).unwrap()
    }

    /// Cheap deterministic surrogate fitness: prefers small trees, so the
    /// search has a real gradient without touching data.
    fn surrogate(geno: &GenotypeTree, _stream: StreamId) -> Result<f64> {
        Ok(100.0 / (1.0 + geno.size() as f64))
    }

    fn small_config(generations: usize) -> EvolutionConfig {
        EvolutionConfig {
            population_size: 20,
            generations,
            seed: 42,
            init_depth_min: 2,
            init_depth_max: 6,
            ..EvolutionConfig::default()
        }
    }

    #[test]
    fn breeding_plan_rounds_as_specified() {
        let mut cfg = EvolutionConfig::default();
        assert_eq!(breeding_plan(&cfg), (1, 50, 49));
        cfg.population_size = 30;
        assert_eq!(breeding_plan(&cfg), (1, 14, 15));
        cfg.population_size = 1;
        assert_eq!(breeding_plan(&cfg), (1, 0, 0));
    }

    #[test]
    fn config_validation() {
        let mut cfg = EvolutionConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.crossover_rate = 0.6;
        assert!(cfg.validate().is_err());
        cfg = EvolutionConfig { init_depth_min: 1, ..EvolutionConfig::default() };
        assert!(cfg.validate().is_err());
        cfg = EvolutionConfig { max_depth: 5, ..EvolutionConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_generations_returns_best_of_initial_population() {
        let reg = reg();
        let out = evolve(&reg, &small_config(0), 1, |_| {}, surrogate).unwrap();
        assert!(out.log.is_empty());
        // The minimum legal tree has 7 nodes; the surrogate is maximized by
        // the smallest tree in the initial population.
        assert!(out.best.fitness.unwrap() <= 100.0 / 8.0);
    }

    #[test]
    fn best_fitness_is_non_decreasing_and_log_is_complete() {
        let reg = reg();
        let out = evolve(&reg, &small_config(8), 1, |_| {}, surrogate).unwrap();
        assert_eq!(out.log.len(), 8);
        for (g, row) in out.log.iter().enumerate() {
            assert_eq!(row.generation, g);
            assert!(row.mean_tree_size >= 7.0);
        }
        for pair in out.log.windows(2) {
            assert!(pair[1].best_fitness >= pair[0].best_fitness);
        }
    }

    #[test]
    fn evolution_is_deterministic_and_parallel_invariant() {
        let reg = reg();
        let a = evolve(&reg, &small_config(5), 1, |_| {}, surrogate).unwrap();
        let b = evolve(&reg, &small_config(5), 1, |_| {}, surrogate).unwrap();
        assert_eq!(sexpr::render(&a.best.genotype, &reg), sexpr::render(&b.best.genotype, &reg));
        assert_eq!(a.log, b.log.iter().cloned().map(|mut r| {
            // Wall time legitimately differs between runs.
            r.elapsed_s = a.log[r.generation].elapsed_s;
            r
        }).collect::<Vec<_>>());

        let c = evolve(&reg, &small_config(5), 4, |_| {}, surrogate).unwrap();
        assert_eq!(sexpr::render(&a.best.genotype, &reg), sexpr::render(&c.best.genotype, &reg));
    }

    #[test]
    fn failures_score_zero_and_do_not_abort() {
        let reg = reg();
        let out = evolve(&reg, &small_config(3), 1, |_| {}, |geno, _| {
            if geno.size() % 2 == 0 {
                Err(crate::error::EdlgpError::Internal("boom".into()))
            } else {
                Ok(50.0)
            }
        })
        .unwrap();
        assert_eq!(out.log.len(), 3);
        assert_eq!(out.best.fitness, Some(50.0));
    }

    #[test]
    fn generation_hook_runs_once_per_generation() {
        let reg = reg();
        let count = std::sync::atomic::AtomicUsize::new(0);
        let _ = evolve(&reg, &small_config(4), 1, |_| {
            count.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }, surrogate)
        .unwrap();
        assert_eq!(count.load(std::sync::atomic::Ordering::Relaxed), 4);
    }
}
