//! The experiment catalogue.

use crate::config::{ConfigError, ExperimentConfig, RawConfig};
use crate::experiments;
use crate::{Ctx, Outcome};

/// A named experiment with its default configuration.
pub struct Experiment {
    pub name: &'static str,
    /// The mathematical statement the experiment probes.
    pub citation: &'static str,
    pub summary: &'static str,
    /// Flat TOML listing every accepted key with its default value.
    pub defaults: &'static str,
    pub(crate) run: fn(&ExperimentConfig, &Ctx) -> anyhow::Result<Outcome>,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment").field("name", &self.name).finish_non_exhaustive()
    }
}

impl Experiment {
    pub fn default_config(&self) -> ExperimentConfig {
        ExperimentConfig::resolve(self.name, self.defaults, &RawConfig::default()).expect("registry defaults parse")
    }

    pub fn configure(&self, raw: &RawConfig) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::resolve(self.name, self.defaults, raw)
    }

    pub fn run(&self, cfg: &ExperimentConfig, ctx: &Ctx) -> anyhow::Result<Outcome> {
        anyhow::ensure!(cfg.experiment == self.name, "config is for `{}`, not `{}`", cfg.experiment, self.name);
        (self.run)(cfg, ctx)
    }
}

pub fn registry() -> &'static [Experiment] {
    REGISTRY
}

pub fn find(name: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name)
}

static REGISTRY: &[Experiment] = &[
    Experiment {
        name: "spdc-sums",
        citation: "growth of sums and maxima of observables with regular suplevels under super-polynomial decay of correlations: n^(1/(alpha+eps)) <= M_n < S_n <= n^(1/(alpha-eps))",
        summary: "log-log slopes of S_n and M_n for phi = d(x, x0)^-k on the doubling and tent maps",
        defaults: experiments::sums::SPDC_DEFAULTS,
        run: experiments::sums::spdc_sums,
    },
    Experiment {
        name: "gm-maxima",
        citation: "maxima of Gibbs-Markov observables with return tail n^(-beta-1): n^(1/beta) (log n)^(-1/beta-eps) <= M_n <= n^(1/beta) (log n)^(1/beta+eps)",
        summary: "slope of log M_k over induced time for LSV return times",
        defaults: experiments::induced::GM_DEFAULTS,
        run: experiments::induced::gm_maxima,
    },
    Experiment {
        name: "loglaw",
        citation: "logarithm law for intermittent maps: log tau_r / -log r -> max(1, alpha) for targets in (1/2, 1]",
        summary: "hitting-time exponent of shrinking balls around a point of (1/2, 1] for LSV maps",
        defaults: experiments::hitting::LOGLAW_DEFAULTS,
        run: experiments::hitting::loglaw,
    },
    Experiment {
        name: "tent-hit",
        citation: "hitting times of the tent map for phi = -log d(x, x0): log tau_u = u + O(log u)",
        summary: "deviation of log tau_u from u over a level grid, random targets",
        defaults: experiments::hitting::TENT_DEFAULTS,
        run: experiments::hitting::tent_hit,
    },
    Experiment {
        name: "max-hit-duality",
        citation: "maxima and hitting times are dual: {M_n < u} = {tau_u >= n}",
        summary: "exact event identities, trace monotonicity, continued-fraction and skew-fiber exactness, run-length/hitting link",
        defaults: experiments::exact::DUALITY_DEFAULTS,
        run: experiments::exact::max_hit_duality,
    },
    Experiment {
        name: "bc-infinite",
        citation: "shrinking-target sandwich for infinite-measure intermittent maps: sum_{k<=n^(1/(a+e))} mu(B_{k^(a+e)}) <= sum_{k<=n} 1_{B_k}(f^k x) <= sum_{k<=n^(1/(a-e))} mu(B_{k^(a-e)})",
        summary: "shrinking-target counts for LSV alpha = 2 against both companion series",
        defaults: experiments::bc::BC_DEFAULTS,
        run: experiments::bc::bc_infinite,
    },
    Experiment {
        name: "maxima-int",
        citation: "maxima for intermittent maps with alpha >= 1: psi((log n)^c / n^(1/alpha)) <= M_n <= psi(1 / (n^(1/alpha) (log n)^(2+eps)))",
        summary: "slope of log M_n for phi = d(x, x0)^-1 on LSV alpha = 2, at the neutral point and away from it",
        defaults: experiments::sums::MAXIMA_INT_DEFAULTS,
        run: experiments::sums::maxima_int,
    },
    Experiment {
        name: "runlength",
        citation: "run lengths of intermittent maps: xi1_n / log2 n -> 1/alpha and log xi0_n / log n -> 1",
        summary: "longest runs of each symbol of the partition [0, 1/2), [1/2, 1)",
        defaults: experiments::symbolic::RUNLENGTH_DEFAULTS,
        run: experiments::symbolic::runlength,
    },
    Experiment {
        name: "erdos-renyi",
        citation: "Erdos-Renyi law for intermittent maps: windowed sums over windows K(n) = c log2 n / alpha are maximal",
        summary: "window maxima of the indicator of [1/2, 1) relative to the window length",
        defaults: experiments::symbolic::ER_DEFAULTS,
        run: experiments::symbolic::erdos_renyi,
    },
    Experiment {
        name: "rotation-oscillation",
        citation: "oscillating sums for rotations of type gamma: liminf log S_n / log n <= 1 + beta/gamma < beta <= limsup",
        summary: "tail extremes of log S_n / log n for phi = d(t, 0)^-beta on a rotation of prescribed type",
        defaults: experiments::rotation::ROTATION_DEFAULTS,
        run: experiments::rotation::rotation_oscillation,
    },
    Experiment {
        name: "skew-oscillation",
        citation: "oscillating sums for the doubling skew product F(x, t) = (2x, t + theta 1_[1/2,1](x)): liminf <= 2 + beta/gamma, limsup >= beta",
        summary: "tail extremes of log S_n / log n for a fiber observable of the doubling skew product",
        defaults: experiments::rotation::SKEW_DEFAULTS,
        run: experiments::rotation::skew_oscillation,
    },
    Experiment {
        name: "yxi-slow",
        citation: "slow sums over two-angle skew products with angles in Y_xi: limsup log S_n / log n <= k / max(3, xi) + 1",
        summary: "growth exponent of S_n for phi = d(y, y0)^-k on the doubling torus skew product with a certified Y_xi angle pair",
        defaults: experiments::rotation::YXI_DEFAULTS,
        run: experiments::rotation::yxi_slow,
    },
    Experiment {
        name: "gamma-bound",
        citation: "small-maxima bound for Gibbs-Markov maps (appendix lemma): P_n <= D1 (1 - D0 gamma_n^-beta)^n, summable for gamma_n = n^(1/beta) (log n)^(-1/beta-eps)",
        summary: "fraction of induced LSV orbits whose first n return times all stay below gamma_n",
        defaults: experiments::induced::GAMMA_DEFAULTS,
        run: experiments::induced::gamma_bound,
    },
    Experiment {
        name: "tower-bc",
        citation: "shrinking targets on Young towers with return tail n^(-beta-1): liminf of count over the lower series >= 1",
        summary: "shrinking-target counts on a synthetic tower with power-law return times",
        defaults: experiments::bc::TOWER_DEFAULTS,
        run: experiments::bc::tower_bc,
    },
    Experiment {
        name: "aaronson-diagnostic",
        citation: "regularity of rescaling sequences: a(S_n)/n -> 0 for a(x) = x^(alpha_phi - eps)",
        summary: "decrease of S_n^(alpha_phi - eps) / n for induced return-time sums and for maxima-int sums",
        defaults: experiments::sums::AARONSON_DEFAULTS,
        run: experiments::sums::aaronson,
    },
];
