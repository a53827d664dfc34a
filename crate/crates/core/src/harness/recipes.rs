//! Built-in experiment recipes reproducing the figure designs.

use super::config::{
    CovarianceSpec, ExperimentConfig, InterfererRule, Output, PathlossSpec, PilotLengthRule, SnrSpec, Sweep,
};
use crate::covgen::DEFAULT_QUADRATURE_NODES;
use crate::pilots::PilotModel;

pub struct Recipe {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> ExperimentConfig,
}

impl Recipe {
    pub fn config(&self) -> ExperimentConfig {
        (self.build)()
    }
}

fn max_entropy() -> CovarianceSpec {
    CovarianceSpec::MaxEntropy { tau: 0.25 }
}

fn one_ring() -> CovarianceSpec {
    CovarianceSpec::OneRingUca { spread_deg: 10.0, nodes: DEFAULT_QUADRATURE_NODES }
}

fn base(name: &str, covariances: Vec<CovarianceSpec>, outputs: Vec<Output>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        sweep: Sweep::Antennas(vec![32, 64, 96, 128]),
        antennas: None,
        interferers: InterfererRule::QuarterMinusOne,
        pilot_length: PilotLengthRule::Alpha(0.75),
        covariances,
        pilots: PilotModel::RandomPhase,
        snr_db: SnrSpec::Uniform(15.0),
        pathloss: PathlossSpec::Uniform(1.0),
        trials: 100,
        seed: 2019,
        outputs,
        output: None,
        solver: None,
        regime_thresholds: None,
    }
}

fn deteq_outputs() -> Vec<Output> {
    vec![
        Output::ExactMse,
        Output::Thm1,
        Output::Thm3,
        Output::Thm4,
        Output::Gamma,
        Output::ALLambdaMin,
        Output::Assumption3,
        Output::RankStats,
    ]
}

fn fig1() -> ExperimentConfig {
    let mut c = base("fig1", vec![max_entropy(), one_ring()], vec![Output::RankStats]);
    c.sweep = Sweep::Antennas(vec![16, 32, 48, 64, 80, 96, 112, 128]);
    c
}

fn fig2_caption() -> ExperimentConfig {
    base("fig2_caption", vec![max_entropy()], deteq_outputs())
}

fn fig2_prose() -> ExperimentConfig {
    let mut c = base("fig2_prose", vec![max_entropy()], deteq_outputs());
    c.pilot_length = PilotLengthRule::QuarterOfK;
    c
}

fn fig3() -> ExperimentConfig {
    base("fig3", vec![one_ring()], deteq_outputs())
}

fn fig4() -> ExperimentConfig {
    let mut c = base("fig4", vec![max_entropy()], vec![Output::PilotLength, Output::RankStats]);
    c.pilot_length = PilotLengthRule::Search;
    c
}

fn fig5() -> ExperimentConfig {
    let mut c = base("fig5", vec![one_ring()], vec![Output::PilotLength, Output::RankStats]);
    c.pilot_length = PilotLengthRule::Search;
    c
}

pub const RECIPES: &[Recipe] = &[
    Recipe { name: "fig1", description: "normalized covariance rank vs M, max-entropy and one-ring 10°", build: fig1 },
    Recipe {
        name: "fig2_caption",
        description: "max-entropy τ=1/4, K=⌊M/4⌋−1, L=⌊3K/4⌋, 15 dB: exact MSE vs all equivalents",
        build: fig2_caption,
    },
    Recipe { name: "fig2_prose", description: "as fig2_caption with L=⌊K/4⌋", build: fig2_prose },
    Recipe { name: "fig3", description: "one-ring UCA 10°: exact MSE vs all equivalents", build: fig3 },
    Recipe { name: "fig4", description: "minimum pilot length search, max-entropy τ=1/4", build: fig4 },
    Recipe { name: "fig5", description: "minimum pilot length search, one-ring UCA 10°", build: fig5 },
];

pub const DEFAULT_RECIPE: &str = "fig2_caption";

/// Accepts `fig2` as shorthand for the default figure-2 recipe.
pub fn recipe(name: &str) -> Option<ExperimentConfig> {
    let name = if name == "fig2" { DEFAULT_RECIPE } else { name };
    RECIPES.iter().find(|r| r.name == name).map(Recipe::config)
}
