//! Event-driven averaging process on the complete graph.
//!
//! All N^2 ordered pairs ring at rate 1/N each, aggregated into one
//! exponential clock of rate N; each event draws `(x, y)` i.i.d. uniform,
//! self-pairs included. A self-pair leaves opinions unchanged but still
//! counts as one interaction attempt for the vertex involved, so every
//! vertex attempts interactions at rate `2(1 - 1/(2N))` exactly. Time
//! advances by summing exponential waiting times; there is no
//! discretization.

use crate::error::{Error, Result};
use crate::init::InitialDistribution;
use crate::opinion::{sample_initial, OpinionConfig};
use crate::rng::{Event, EventLog, RngStream};

/// Aligned state snapshot: opinions and interaction counters at time `t`.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub opinions: Vec<f64>,
    pub xi: Vec<u32>,
}

/// Completed trajectory of one run.
#[derive(Debug, Clone)]
pub struct CompleteGraphRun {
    pub n: usize,
    pub horizon: f64,
    pub snapshots: Vec<Snapshot>,
    pub final_opinions: Vec<f64>,
    /// Interaction attempts per vertex up to the horizon.
    pub final_xi: Vec<u32>,
    pub events_applied: u64,
}

impl CompleteGraphRun {
    pub fn snapshot_at(&self, t: f64) -> Result<&Snapshot> {
        self.snapshots
            .iter()
            .find(|s| s.t == t)
            .ok_or(Error::MissingSnapshot { t })
    }
}

/// Vertex counts by number of interaction attempts: `counts[j]` is the
/// number of vertices with exactly `j` attempts at time `t`.
#[derive(Debug, Clone)]
pub struct XjStatistic {
    pub counts: Vec<u64>,
    pub t: f64,
    pub n: usize,
}

/// Draws the next event: waiting time ~ Exp(n), then `x`, then `y`,
/// each uniform on `0..n` (draw order is part of the replay contract).
pub fn next_event(n: usize, rng: &mut RngStream) -> Event {
    debug_assert!(n >= 1);
    let waiting_time = rng.exponential(n as f64);
    let x = rng.index(n);
    let y = rng.index(n);
    Event { waiting_time, x, y }
}

fn checked_schedule(snapshot_times: &[f64], horizon: f64) -> Result<Vec<f64>> {
    let mut times = snapshot_times.to_vec();
    for &t in &times {
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::InvalidSchedule(format!(
                "snapshot time {t} outside [0, {horizon}]"
            )));
        }
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    Ok(times)
}

/// Runs the process from freshly sampled initial opinions.
pub fn run(
    dist: &InitialDistribution,
    n: usize,
    horizon: f64,
    snapshot_times: &[f64],
    rng: &mut RngStream,
) -> Result<CompleteGraphRun> {
    let config = sample_initial(dist, n, rng)?;
    run_with_config(config, horizon, snapshot_times, rng, None)
}

/// Runs the process and materializes the event sequence for later replay.
pub fn run_recorded(
    dist: &InitialDistribution,
    n: usize,
    horizon: f64,
    snapshot_times: &[f64],
    rng: &mut RngStream,
) -> Result<(CompleteGraphRun, OpinionConfig, EventLog)> {
    let config = sample_initial(dist, n, rng)?;
    let initial = config.clone();
    let mut log = EventLog::default();
    let run = run_with_config(config, horizon, snapshot_times, rng, Some(&mut log))?;
    Ok((run, initial, log))
}

/// Runs from a given configuration, applying events until the cumulative
/// event time would exceed the horizon. Each requested snapshot records the
/// state at the last event time at or before it.
pub fn run_with_config(
    mut config: OpinionConfig,
    horizon: f64,
    snapshot_times: &[f64],
    rng: &mut RngStream,
    mut record: Option<&mut EventLog>,
) -> Result<CompleteGraphRun> {
    if horizon < 0.0 {
        return Err(Error::InvalidSchedule(format!(
            "negative horizon {horizon}"
        )));
    }
    let n = config.n_vertices();
    let times = checked_schedule(snapshot_times, horizon)?;

    let mut xi = vec![0u32; n];
    let mut snapshots = Vec::with_capacity(times.len());
    let mut next_snap = 0;
    let mut t = config.time;
    let mut events_applied = 0u64;

    loop {
        let event = next_event(n, rng);
        let t_next = t + event.waiting_time;

        while next_snap < times.len() && times[next_snap] < t_next {
            snapshots.push(Snapshot {
                t: times[next_snap],
                opinions: config.opinions.clone(),
                xi: xi.clone(),
            });
            next_snap += 1;
        }

        if t_next > horizon {
            break;
        }
        if let Some(log) = record.as_deref_mut() {
            log.push(event);
        }
        config.apply_average(event.x, event.y)?;
        xi[event.x] += 1;
        if event.y != event.x {
            xi[event.y] += 1;
        }
        t = t_next;
        events_applied += 1;
    }

    while next_snap < times.len() {
        snapshots.push(Snapshot {
            t: times[next_snap],
            opinions: config.opinions.clone(),
            xi: xi.clone(),
        });
        next_snap += 1;
    }

    config.time = horizon;
    Ok(CompleteGraphRun {
        n,
        horizon,
        snapshots,
        final_opinions: config.opinions,
        final_xi: xi,
        events_applied,
    })
}

/// Histogram of interaction counts at a snapshotted time.
pub fn xj_counts(run: &CompleteGraphRun, t: f64) -> Result<XjStatistic> {
    let snap = run.snapshot_at(t)?;
    let j_max = snap.xi.iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; j_max + 1];
    for &j in &snap.xi {
        counts[j as usize] += 1;
    }
    Ok(XjStatistic {
        counts,
        t,
        n: run.n,
    })
}

/// Expected number of vertices with exactly `j` interaction attempts at
/// time `t`: `N (2t)^j / j! (1 - 1/(2N))^j exp(-2t (1 - 1/(2N)))`.
///
/// Evaluated in log space so large `j` stays finite.
pub fn expected_xj(n: usize, t: f64, j: u32) -> f64 {
    assert!(n >= 1 && t >= 0.0);
    let rate = 2.0 * t * (1.0 - 1.0 / (2.0 * n as f64));
    if rate == 0.0 {
        return if j == 0 { n as f64 } else { 0.0 };
    }
    let mut log_pmf = -rate + j as f64 * rate.ln();
    for k in 1..=j {
        log_pmf -= (k as f64).ln();
    }
    n as f64 * log_pmf.exp()
}

/// Result of replaying one event log with and without an initial
/// perturbation at a single vertex.
#[derive(Debug, Clone, Copy)]
pub struct PerturbedReplay {
    /// Unperturbed opinion of the vertex at the requested time.
    pub original: f64,
    /// Opinion of the vertex when its initial value was shifted by `delta`.
    pub perturbed: f64,
    /// Interaction attempts of the vertex up to the requested time.
    pub j: u32,
}

/// Replays `log` on `initial` and on `initial + delta * e_x`, following both
/// trajectories up to time `t`.
///
/// Since every update is a midpoint, the perturbation at `x` is divided by at
/// most 2 per interaction, so `perturbed - original` keeps the sign of
/// `delta` and `|perturbed - original| >= |delta| / 2^j`.
pub fn perturbed_replay(
    initial: &OpinionConfig,
    log: &EventLog,
    x: usize,
    delta: f64,
    t: f64,
) -> Result<PerturbedReplay> {
    let n = initial.n_vertices();
    if x >= n {
        return Err(Error::InvalidVertex { index: x, n });
    }
    log.validate(n)?;

    let mut base = initial.clone();
    let mut shifted = initial.clone();
    shifted.opinions[x] += delta;

    let mut j = 0u32;
    let mut clock = initial.time;
    for event in &log.events {
        clock += event.waiting_time;
        if clock > t {
            break;
        }
        base.apply_average(event.x, event.y)?;
        shifted.apply_average(event.x, event.y)?;
        if event.x == x || event.y == x {
            j += 1;
        }
    }

    Ok(PerturbedReplay {
        original: base.opinions[x],
        perturbed: shifted.opinions[x],
        j,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    #[test]
    fn single_vertex_events() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..100 {
            let e = next_event(1, &mut rng);
            assert_eq!((e.x, e.y), (0, 0));
            assert!(e.waiting_time > 0.0);
        }
    }

    #[test]
    fn waiting_time_mean_large_n() {
        let n = 10_000;
        let mut rng = RngStream::new(2, 0);
        let draws = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            sum += next_event(n, &mut rng).waiting_time;
        }
        let mean = sum / draws as f64;
        // Exp(N) has mean and sd 1/N; 3 sigma band.
        let band = 3.0 * (1.0 / n as f64) / (draws as f64).sqrt();
        assert!((mean - 1e-4).abs() < band, "mean {mean}");
    }

    #[test]
    fn self_pair_fraction_n2() {
        let mut rng = RngStream::new(3, 0);
        let draws = 1_000_000;
        let selfs = (0..draws)
            .filter(|_| {
                let e = next_event(2, &mut rng);
                e.x == e.y
            })
            .count();
        let frac = selfs as f64 / draws as f64;
        let band = 3.0 * 0.5 / (draws as f64).sqrt();
        assert!((frac - 0.5).abs() < band, "self-pair fraction {frac}");
    }

    #[test]
    fn absorbing_pair() {
        let mut rng = RngStream::new(4, 0);
        let run = run_with_config(
            OpinionConfig::new(vec![0.0, 1.0]),
            50.0,
            &[50.0],
            &mut rng,
            None,
        )
        .unwrap();
        assert_eq!(run.final_opinions, vec![0.5, 0.5]);
    }

    #[test]
    fn conservation_and_range() {
        let dist = InitialDistribution::Bernoulli(0.5);
        let mut rng = RngStream::new(5, 0);
        let times: Vec<f64> = (0..=8).map(|i| i as f64 * 0.25).collect();
        let run = run(&dist, 10_000, 2.0, &times, &mut rng).unwrap();
        let sum0 = run.snapshots[0].opinions.iter().sum::<f64>();
        for s in &run.snapshots {
            let sum = s.opinions.iter().sum::<f64>();
            assert!((sum - sum0).abs() <= 1e-9 * (1.0 + sum0.abs()));
            for &v in &s.opinions {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn snapshot_schedule_validated() {
        let dist = InitialDistribution::PointMass(1.0);
        let mut rng = RngStream::new(6, 0);
        assert!(matches!(
            run(&dist, 10, 1.0, &[2.0], &mut rng),
            Err(Error::InvalidSchedule(_))
        ));
    }

    #[test]
    fn xi_accounting_totals() {
        // Each distinct-pair event adds 2 attempts, each self-pair adds 1.
        let dist = InitialDistribution::Uniform(0.0, 1.0);
        let mut rng = RngStream::new(7, 0);
        let mut log = EventLog::default();
        let initial = sample_initial(&dist, 50, &mut rng).unwrap();
        let run =
            run_with_config(initial, 1.0, &[1.0], &mut rng, Some(&mut log)).unwrap();
        let self_pairs = log.events.iter().filter(|e| e.x == e.y).count() as u64;
        let pair_events = run.events_applied - self_pairs;
        let total_xi: u64 = run.final_xi.iter().map(|&x| x as u64).sum();
        assert_eq!(total_xi, 2 * pair_events + self_pairs);
    }

    #[test]
    fn xj_counts_at_zero() {
        let dist = InitialDistribution::PointMass(0.0);
        let mut rng = RngStream::new(8, 0);
        let run = run(&dist, 100, 1.0, &[0.0, 1.0], &mut rng).unwrap();
        let xj = xj_counts(&run, 0.0).unwrap();
        assert_eq!(xj.counts[0], 100);
        assert_eq!(xj.counts.iter().sum::<u64>(), 100);
        let xj1 = xj_counts(&run, 1.0).unwrap();
        assert_eq!(xj1.counts.iter().sum::<u64>(), 100);
        assert!(matches!(
            xj_counts(&run, 0.5),
            Err(Error::MissingSnapshot { .. })
        ));
    }

    #[test]
    fn expected_xj_values() {
        assert_eq!(expected_xj(123, 0.0, 0), 123.0);
        assert_eq!(expected_xj(123, 0.0, 3), 0.0);
        // Frozen from an independent arbitrary-precision evaluation of the
        // formula at N = 1e4, t = 1.
        let cases = [
            (0, 1353.4881744163533),
            (1, 2706.8410000152649),
            (2, 2706.7056579652641),
            (3, 1804.3802151215772),
        ];
        for (j, want) in cases {
            let got = expected_xj(10_000, 1.0, j);
            assert!(
                (got - want).abs() < 1e-8 * want,
                "j={j}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn expected_xj_matches_replicas() {
        let n = 2_000;
        let t = 1.0;
        let reps = 60;
        let dist = InitialDistribution::Bernoulli(0.5);
        let mut samples: Vec<Vec<f64>> = vec![Vec::new(); 4];
        for r in 0..reps {
            let mut rng = RngStream::new(100, r);
            let run = run(&dist, n, t, &[t], &mut rng).unwrap();
            let xj = xj_counts(&run, t).unwrap();
            for j in 0..4 {
                let c = xj.counts.get(j).copied().unwrap_or(0) as f64;
                samples[j].push(c);
            }
        }
        for j in 0..4 {
            let mean = stats::mean(&samples[j]);
            let se = stats::standard_error(&samples[j]);
            let want = expected_xj(n, t, j as u32);
            assert!(
                (mean - want).abs() <= 3.0 * se,
                "j={j}: mean {mean}, expected {want}, se {se}"
            );
        }
    }

    #[test]
    fn replay_reproduces_trajectory() {
        let dist = InitialDistribution::Uniform(-1.0, 1.0);
        let mut rng = RngStream::new(9, 0);
        let (run_a, initial, log) = run_recorded(&dist, 64, 1.5, &[1.5], &mut rng).unwrap();

        // Virtual replay: regenerate from the same stream address.
        let mut rng2 = RngStream::new(9, 0);
        let run_b = run(&dist, 64, 1.5, &[1.5], &mut rng2).unwrap();
        assert_eq!(run_a.final_opinions, run_b.final_opinions);

        // Materialized replay through the log.
        let mut replayed = initial.clone();
        for e in &log.events {
            replayed.apply_average(e.x, e.y).unwrap();
        }
        assert_eq!(replayed.opinions, run_a.final_opinions);
    }

    #[test]
    fn perturbation_zero_delta() {
        let dist = InitialDistribution::Uniform(0.0, 1.0);
        let mut rng = RngStream::new(10, 0);
        let (_, initial, log) = run_recorded(&dist, 32, 1.0, &[1.0], &mut rng).unwrap();
        let r = perturbed_replay(&initial, &log, 5, 0.0, 1.0).unwrap();
        assert_eq!(r.original, r.perturbed);
    }

    #[test]
    fn perturbation_untouched_vertex() {
        // Vertex that never interacts keeps the full shift.
        let initial = OpinionConfig::new(vec![0.0, 1.0, 2.0]);
        let log = EventLog {
            events: vec![Event {
                waiting_time: 0.1,
                x: 0,
                y: 1,
            }],
        };
        let r = perturbed_replay(&initial, &log, 2, 0.25, 1.0).unwrap();
        assert_eq!(r.j, 0);
        assert_eq!(r.perturbed - r.original, 0.25);
    }

    #[test]
    fn perturbation_lower_bound_sample() {
        let dist = InitialDistribution::Uniform(0.0, 1.0);
        for s in 0..20 {
            let mut rng = RngStream::new(11, s);
            let (_, initial, log) = run_recorded(&dist, 100, 1.0, &[1.0], &mut rng).unwrap();
            let x = (s as usize * 7) % 100;
            let delta = 0.1;
            let r = perturbed_replay(&initial, &log, x, delta, 1.0).unwrap();
            let gap = r.perturbed - r.original;
            let bound = delta / 2f64.powi(r.j as i32);
            assert!(gap > 0.0 && gap >= bound * (1.0 - 1e-12), "gap {gap} < {bound}");
            let rm = perturbed_replay(&initial, &log, x, -delta, 1.0).unwrap();
            let gap_m = rm.perturbed - rm.original;
            assert!(gap_m < 0.0 && gap_m <= -bound * (1.0 - 1e-12));
        }
    }

    #[test]
    fn variance_decay_three_vertex_rate_oracle() {
        // Exact generator action on a 3-vertex configuration: summing
        // rate * [Var(after) - Var(before)] over all 9 ordered pairs at
        // rate 1/N each must equal -Var exactly.
        let configs = [
            vec![0.0, 1.0, 5.0],
            vec![-2.0, 0.3, 0.7],
            vec![1.0, 1.0, 1.0],
            vec![0.25, -0.75, 3.5],
        ];
        for ops in configs {
            let n = ops.len();
            let base = OpinionConfig::new(ops.clone());
            let var0 = base.variance();
            let mut drift = 0.0;
            for x in 0..n {
                for y in 0..n {
                    let mut c = base.clone();
                    c.apply_average(x, y).unwrap();
                    drift += (c.variance() - var0) / n as f64;
                }
            }
            assert!(
                (drift + var0).abs() <= 1e-12 * (1.0 + var0.abs()),
                "generator drift {drift} vs -Var {var0}"
            );
        }
    }

    #[test]
    fn variance_decay_monte_carlo() {
        // Full stated size in optimized builds, a smoke size otherwise.
        let (n, reps) = if cfg!(debug_assertions) {
            (2_000, 80)
        } else {
            (10_000, 100)
        };
        let dist = InitialDistribution::Bernoulli(0.5);
        let times = [0.5, 1.0, 2.0];
        let mut gaps: Vec<Vec<f64>> = vec![Vec::new(); times.len()];
        for r in 0..reps {
            let mut rng = RngStream::new(200, r);
            let mut snap_times = vec![0.0];
            snap_times.extend_from_slice(&times);
            let run = run(&dist, n, 2.0, &snap_times, &mut rng).unwrap();
            let var0 = {
                let s = run.snapshot_at(0.0).unwrap();
                OpinionConfig::new(s.opinions.clone()).variance()
            };
            for (k, &t) in times.iter().enumerate() {
                let s = run.snapshot_at(t).unwrap();
                let var_t = OpinionConfig::new(s.opinions.clone()).variance();
                gaps[k].push(var_t - var0 * (-t).exp());
            }
        }
        for (k, &t) in times.iter().enumerate() {
            let mean = stats::mean(&gaps[k]);
            let se = stats::standard_error(&gaps[k]);
            assert!(
                mean.abs() <= 3.0 * se,
                "t={t}: variance gap {mean} exceeds 3 se {se}"
            );
        }
    }
}
