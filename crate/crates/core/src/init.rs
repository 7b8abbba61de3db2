//! Reproducible random initial conditions: a Gaussian mixture with uniform
//! random means, or a uniform ball.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::PointSet;
use crate::model::Ensemble;
use crate::seeding::substream;
use crate::{Error, Result};

const TAG_INIT: u64 = 3;

pub const DEFAULT_COMPONENT_STD: f64 = 1.0;
pub const DEFAULT_MEAN_BOX_HALFWIDTH: f64 = 10.0;
pub const DEFAULT_BALL_RADIUS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    GaussianMixture,
    Ball,
}

/// Specification of a random initial ensemble. Identical specs generate
/// bitwise identical ensembles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitSpec {
    pub kind: InitKind,
    pub n_agents: usize,
    pub dim: usize,
    /// Mixture only: number of Gaussian components.
    pub n_components: usize,
    /// Mixture only: isotropic standard deviation around each mean.
    pub component_std: f64,
    /// Mixture only: means are uniform in `[-halfwidth, halfwidth]^D`.
    pub mean_box_halfwidth: f64,
    /// Ball only: agents are uniform in the D-ball of this radius.
    pub radius: f64,
    pub seed: u64,
}

impl InitSpec {
    pub fn ball(n_agents: usize, dim: usize, radius: f64, seed: u64) -> Self {
        InitSpec {
            kind: InitKind::Ball,
            n_agents,
            dim,
            n_components: 1,
            component_std: DEFAULT_COMPONENT_STD,
            mean_box_halfwidth: DEFAULT_MEAN_BOX_HALFWIDTH,
            radius,
            seed,
        }
    }

    pub fn gaussian_mixture(n_agents: usize, dim: usize, n_components: usize, seed: u64) -> Self {
        InitSpec {
            kind: InitKind::GaussianMixture,
            n_agents,
            dim,
            n_components,
            component_std: DEFAULT_COMPONENT_STD,
            mean_box_halfwidth: DEFAULT_MEAN_BOX_HALFWIDTH,
            radius: DEFAULT_BALL_RADIUS,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 || self.dim == 0 {
            return Err(Error::InvalidParameter(
                "n_agents and dim must be >= 1".into(),
            ));
        }
        if self.n_components == 0 {
            return Err(Error::InvalidParameter("n_components must be >= 1".into()));
        }
        for (name, v) in [
            ("component_std", self.component_std),
            ("mean_box_halfwidth", self.mean_box_halfwidth),
            ("radius", self.radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Draws the initial ensemble described by this spec.
    pub fn generate(&self) -> Result<Ensemble> {
        self.validate()?;
        let mut rng = substream(self.seed, &[TAG_INIT]);
        let data = match self.kind {
            InitKind::Ball => self.generate_ball(&mut rng),
            InitKind::GaussianMixture => self.generate_mixture(&mut rng),
        };
        Ok(Ensemble::new(PointSet::from_flat(data, self.dim)?))
    }

    fn generate_ball(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut data = Vec::with_capacity(self.n_agents * self.dim);
        for _ in 0..self.n_agents {
            // uniform direction from a normal vector, radius via u^(1/D)
            let mut g: Vec<f64>;
            let mut nrm;
            loop {
                g = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
                nrm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                if nrm > 1e-12 {
                    break;
                }
            }
            let u: f64 = rng.random();
            let r = self.radius * u.powf(1.0 / self.dim as f64);
            data.extend(g.iter().map(|v| v / nrm * r));
        }
        data
    }

    fn generate_mixture(&self, rng: &mut impl Rng) -> Vec<f64> {
        let hw = self.mean_box_halfwidth;
        let means: Vec<Vec<f64>> = (0..self.n_components)
            .map(|_| (0..self.dim).map(|_| rng.random_range(-hw..hw)).collect())
            .collect();
        // as even a split as possible, remainder to the lowest-index components
        let base = self.n_agents / self.n_components;
        let rem = self.n_agents % self.n_components;
        let mut data = Vec::with_capacity(self.n_agents * self.dim);
        for (c, mean) in means.iter().enumerate() {
            let count = base + usize::from(c < rem);
            for _ in 0..count {
                for d in 0..self.dim {
                    let noise: f64 = rng.sample(StandardNormal);
                    data.push(mean[d] + self.component_std * noise);
                }
            }
        }
        data
    }
}
