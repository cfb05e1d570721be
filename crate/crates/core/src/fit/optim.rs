//! Adam with one step size per parameter group.

use serde::{Deserialize, Serialize};

use crate::models::{ParamGroup, SceneGradient, SceneParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LearningRates {
    pub directivity: f64,
    pub surfaces: f64,
    pub source_ir: f64,
    pub residual: f64,
    pub spline: f64,
    pub air_absorption: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        LearningRates {
            directivity: 1e-2,
            surfaces: 1e-2,
            source_ir: 1e-3,
            residual: 1e-3,
            spline: 1e-2,
            air_absorption: 1e-3,
        }
    }
}

impl LearningRates {
    pub fn get(&self, group: ParamGroup) -> f64 {
        match group {
            ParamGroup::Directivity => self.directivity,
            ParamGroup::Surfaces => self.surfaces,
            ParamGroup::SourceIr => self.source_ir,
            ParamGroup::Residual => self.residual,
            ParamGroup::Spline => self.spline,
            ParamGroup::AirAbsorption => self.air_absorption,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    rates: LearningRates,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(rates: LearningRates) -> Self {
        Adam {
            rates,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }

    /// One update of `params` along `-grad`, then clamping.
    pub fn step(&mut self, params: &mut SceneParams, grad: &SceneGradient) {
        let g = grad.flat();
        if self.m.len() != g.len() {
            self.m = vec![0.0; g.len()];
            self.v = vec![0.0; g.len()];
            self.t = 0;
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let mut i = 0;
        for (group, slice) in params.groups_mut() {
            let lr = self.rates.get(group);
            for p in slice.iter_mut() {
                let gi = g[i];
                self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * gi;
                self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * gi * gi;
                *p -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
                i += 1;
            }
        }
        params.clamp();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Room};

    #[test]
    fn first_step_moves_each_group_by_its_rate() {
        let room = Room::shoebox([3.0, 3.0, 3.0]).unwrap();
        let mut p = SceneParams::initial(&room, Point::zeros(), 600);
        let before = p.clone();
        let mut g = SceneGradient::zeros_like(&p);
        g.log_gains[0] = 2.0;
        g.surfaces.get_mut(&1).unwrap()[3] = -5.0;
        g.residual[10] = 0.1;
        g.air_absorption = 1.0;
        let mut adam = Adam::new(LearningRates::default());
        adam.step(&mut p, &g);
        assert!((p.directivity.log_gains()[0] - before.directivity.log_gains()[0] + 1e-2).abs() < 1e-9);
        assert!((p.surfaces[&1].raw[3] - 1e-2).abs() < 1e-9);
        assert!((p.residual[10] + 1e-3).abs() < 1e-9);
        assert!((p.air_absorption - (0.95 - 1e-3)).abs() < 1e-9);
        assert_eq!(p.source_ir, before.source_ir);
    }

    #[test]
    fn clamps_air_absorption() {
        let room = Room::shoebox([3.0, 3.0, 3.0]).unwrap();
        let mut p = SceneParams::initial(&room, Point::zeros(), 600);
        let mut g = SceneGradient::zeros_like(&p);
        g.air_absorption = -1.0;
        let mut adam = Adam::new(LearningRates {
            air_absorption: 1.0,
            ..LearningRates::default()
        });
        adam.step(&mut p, &g);
        assert_eq!(p.air_absorption, 1.0);
    }
}
