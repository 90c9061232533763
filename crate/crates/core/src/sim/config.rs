use serde::{Deserialize, Serialize};

use crate::control::{ControlConfig, RoutineDefaults};
use crate::lidar::LidarSpec;
use crate::perception::PerceptionConfig;
use crate::supervisor::SupervisorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub velocity_time_constant: f64,
    /// Steady wind, m/s, world frame.
    pub wind: [f64; 3],
    /// Sinusoidal gust along the wind direction (x if calm).
    pub gust_amplitude: f64,
    pub gust_period: f64,
    pub duration_limit: f64,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.05,
            velocity_time_constant: 0.4,
            wind: [0.0; 3],
            gust_amplitude: 0.0,
            gust_period: 10.0,
            duration_limit: 900.0,
            rng_seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0 && self.velocity_time_constant > 0.0) {
            return Err("dt and velocity_time_constant must be positive".into());
        }
        if !(self.duration_limit > 0.0 && self.gust_period > 0.0) {
            return Err("duration_limit and gust_period must be positive".into());
        }
        if !self.wind.iter().all(|w| w.is_finite()) || !self.gust_amplitude.is_finite() {
            return Err("wind must be finite".into());
        }
        Ok(())
    }
}

/// Everything a simulated mission needs besides the bridge and the plan.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionConfig {
    pub sim: SimConfig,
    pub lidar: LidarSpec,
    pub control: ControlConfig,
    pub routine: RoutineDefaults,
    pub perception: PerceptionConfig,
    pub supervisor: SupervisorConfig,
}

impl MissionConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.sim.validate()?;
        self.lidar.validate()?;
        self.control.validate()?;
        self.perception.validate()?;
        self.supervisor.validate()?;
        if !(self.routine.nominal_speed > 0.0 && self.routine.standoff_setpoint > 0.0) {
            return Err("nominal_speed and standoff_setpoint must be positive".into());
        }
        let ratio = self.lidar.period() / self.sim.dt;
        if (ratio - ratio.round()).abs() > 1e-6 {
            return Err("scan period must be a whole number of dynamics steps".into());
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        let c: MissionConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("mission config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip() {
        let c = MissionConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(MissionConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_file() {
        let c = MissionConfig::from_toml("[sim]\nrng_seed = 7\n[lidar]\nscan_rate = 10.0\n").unwrap();
        assert_eq!(c.sim.rng_seed, 7);
        assert_eq!(c.lidar.scan_rate, 10.0);
        assert!(MissionConfig::from_toml("[sim]\nbogus = 1\n").is_err());
        assert!(MissionConfig::from_toml("[lidar]\nscan_rate = 3.0\n").is_err());
    }
}
