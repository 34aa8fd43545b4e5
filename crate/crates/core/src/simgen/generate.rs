use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{save_session, write_manifest, KinematicsVector, Manifest, Session, SessionSource};

use super::geometry::dist;
use super::lidar::{raycast, LidarModel};
use super::oracle::{oracle_policy, OracleConfig};
use super::robot::{step_in_world, RobotState};
use super::world::{StartPose, WorldSpec};
use super::SimError;

pub const FRAME_RATE_HZ: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    pub lidar: LidarModel,
    pub oracle: OracleConfig,
    pub max_frames: usize,
    pub kin_noise_sigma: f64,
    pub goal_tolerance_m: f64,
    pub half_extent_m: f64,
    /// Uniform start perturbation per session: position (m) and heading (rad).
    pub start_jitter_m: f64,
    pub start_jitter_rad: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            lidar: LidarModel::default(),
            oracle: OracleConfig::default(),
            max_frames: 250,
            kin_noise_sigma: 0.02,
            goal_tolerance_m: 0.15,
            half_extent_m: crate::dataset::DEFAULT_HALF_EXTENT_M,
            start_jitter_m: 0.15,
            start_jitter_rad: 0.2,
        }
    }
}

/// Runs one episode at 10 fps until the goal is reached or `max_frames` is hit.
/// The result is a pure function of `(world, cfg, seed)`.
pub fn generate_session(
    world: &WorldSpec,
    cfg: &SimConfig,
    id: &str,
    seed: u64,
) -> Result<Session, SimError> {
    world.validate()?;
    if cfg.max_frames == 0 {
        return Err(SimError::InvalidConfig("max_frames must be positive".into()));
    }
    if cfg.kin_noise_sigma.is_nan() || cfg.kin_noise_sigma < 0.0 {
        return Err(SimError::InvalidConfig("kin_noise_sigma must be non-negative".into()));
    }
    let dt = 1.0 / FRAME_RATE_HZ;
    let mut lidar_rng = ChaCha8Rng::seed_from_u64(seed);
    lidar_rng.set_stream(1);
    let mut kin_rng = ChaCha8Rng::seed_from_u64(seed);
    kin_rng.set_stream(2);
    let kin_noise = (cfg.kin_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, cfg.kin_noise_sigma).expect("finite sigma"));

    let mut robot = RobotState::at(world.start);
    let mut scans = Vec::new();
    let mut kinematics = Vec::new();
    let mut commands = Vec::new();
    let mut reached = false;

    for _ in 0..cfg.max_frames {
        let scan = raycast(world, &robot, &cfg.lidar, &mut lidar_rng);
        let cmd = oracle_policy(world, &robot, &scan, &cfg.oracle);
        let mut kin = robot.kinematics().to_array();
        if let Some(n) = &kin_noise {
            for v in &mut kin {
                *v += n.sample(&mut kin_rng);
            }
        }
        scans.push(scan);
        kinematics.push(KinematicsVector::from_array(kin));
        commands.push(cmd);

        robot = step_in_world(world, &robot, cmd, dt);
        if dist(robot.position(), world.goal) < cfg.goal_tolerance_m {
            reached = true;
            break;
        }
    }

    let mut session = Session::from_streams(
        id,
        FRAME_RATE_HZ,
        cfg.half_extent_m,
        SessionSource::Synthetic,
        Some(seed),
        scans,
        kinematics,
        commands,
    )?;
    session.goal_reached = Some(reached);
    Ok(session)
}

/// Derives a per-session seed from the run seed and the session's slot.
pub fn session_seed(base: u64, scenario: usize, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(((scenario as u64) << 32) | index as u64);
    rng.random()
}

/// Copy of `world` with its start pose perturbed, redrawn until it is collision free.
pub fn jitter_start(world: &WorldSpec, cfg: &SimConfig, seed: u64) -> WorldSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let mut out = world.clone();
    for _ in 0..64 {
        let m = cfg.start_jitter_m;
        let a = cfg.start_jitter_rad;
        let cand = StartPose {
            x: world.start.x + if m > 0.0 { rng.random_range(-m..m) } else { 0.0 },
            y: world.start.y + if m > 0.0 { rng.random_range(-m..m) } else { 0.0 },
            pose: world.start.pose + if a > 0.0 { rng.random_range(-a..a) } else { 0.0 },
        };
        if world.is_free([cand.x, cand.y]) {
            out.start = cand;
            break;
        }
    }
    out
}

/// Generates `counts[i]` sessions of `scenarios[i]` in memory, named `{family}_{i:02}`.
pub fn generate_sessions(
    scenarios: &[WorldSpec],
    counts: &[usize],
    cfg: &SimConfig,
    seed: u64,
) -> Result<Vec<Session>, SimError> {
    if scenarios.is_empty() {
        return Err(SimError::InvalidConfig("at least one scenario is required".into()));
    }
    if counts.len() != scenarios.len() {
        return Err(SimError::InvalidConfig(format!(
            "{} counts for {} scenarios",
            counts.len(),
            scenarios.len()
        )));
    }
    let mut out = Vec::new();
    for (si, (world, &n)) in scenarios.iter().zip(counts).enumerate() {
        let family = if world.name.is_empty() {
            format!("scenario{si}")
        } else {
            world.name.clone()
        };
        for i in 0..n {
            let s = session_seed(seed, si, i);
            let id = format!("{family}_{i:02}");
            out.push(generate_session(&jitter_start(world, cfg, s), cfg, &id, s)?);
        }
    }
    Ok(out)
}

/// Like [`generate_sessions`], but writes each session under `root` plus the manifest.
pub fn generate_dataset_counts(
    scenarios: &[WorldSpec],
    counts: &[usize],
    cfg: &SimConfig,
    seed: u64,
    root: &Path,
) -> Result<Manifest, SimError> {
    let mut manifest = Manifest::default();
    for session in generate_sessions(scenarios, counts, cfg, seed)? {
        save_session(&session, &root.join(&session.id))?;
        manifest.sessions.push(session.id);
    }
    write_manifest(root, &manifest)?;
    Ok(manifest)
}

/// Balanced dataset: the same number of sessions for every scenario.
pub fn generate_dataset(
    scenarios: &[WorldSpec],
    sessions_per_scenario: usize,
    cfg: &SimConfig,
    seed: u64,
    root: &Path,
) -> Result<Manifest, SimError> {
    generate_dataset_counts(
        scenarios,
        &vec![sessions_per_scenario; scenarios.len()],
        cfg,
        seed,
        root,
    )
}

/// Splits `total` sessions over `families` as evenly as possible, larger shares first.
pub fn balanced_counts(total: usize, families: usize) -> Vec<usize> {
    (0..families)
        .map(|i| total / families + usize::from(i < total % families))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CommandVector;
    use crate::simgen::default_scenarios;

    fn quiet() -> SimConfig {
        SimConfig {
            kin_noise_sigma: 0.0,
            ..SimConfig::default()
        }
    }

    #[test]
    fn commands_in_domain_and_streams_aligned() {
        let w = &default_scenarios()[0];
        let s = generate_session(w, &SimConfig::default(), "a", 11).unwrap();
        assert!(s.len() > 20);
        assert!(s.commands.iter().all(|c| CommandVector::ALL.contains(c)));
        assert_eq!(s.scans.len(), s.len());
        assert_eq!(s.kinematics.len(), s.len());
        assert_eq!(s.source, SessionSource::Synthetic);
        assert_eq!(s.seed, Some(11));
    }

    #[test]
    fn zero_noise_matches_ground_truth() {
        let w = &default_scenarios()[1];
        let cfg = quiet();
        let s = generate_session(w, &cfg, "a", 5).unwrap();
        let mut robot = RobotState::at(w.start);
        for (k, cmd) in s.commands.iter().enumerate() {
            assert_eq!(s.kinematics[k], robot.kinematics(), "frame {k}");
            robot = step_in_world(w, &robot, *cmd, 0.1);
        }
    }

    #[test]
    fn deterministic() {
        let w = &default_scenarios()[3];
        let a = generate_session(w, &SimConfig::default(), "a", 99).unwrap();
        let b = generate_session(w, &SimConfig::default(), "a", 99).unwrap();
        assert_eq!(a, b);
        let c = generate_session(w, &SimConfig::default(), "a", 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn frame_cap_flags_unreached_goal() {
        let w = &default_scenarios()[0];
        let cfg = SimConfig { max_frames: 5, ..quiet() };
        let s = generate_session(w, &cfg, "a", 1).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.goal_reached, Some(false));
    }

    #[test]
    fn counts_split() {
        assert_eq!(balanced_counts(38, 6), vec![7, 7, 6, 6, 6, 6]);
        assert_eq!(balanced_counts(12, 6), vec![2; 6]);
    }

    #[test]
    fn empty_scenarios_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(generate_dataset(&[], 2, &quiet(), 0, dir.path()).is_err());
    }
}
