//! Declarative experiment configuration: a strict key-tree file (TOML),
//! schema version 1. Unknown keys are rejected; every key is listed in
//! `docs/config-schema.md`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use nbw_core::disorder::{CouplingDistribution, DeloneSet};
use nbw_core::error::{Error, Result};
use nbw_core::experiments::{
    ConvolutionConfig, EnergyGrid, IdsConfig, LipschitzConfig, SystemSpec, TwoVolumeConfig,
    UcpConfig, WegnerOneConfig, WindowCenter,
};
use nbw_core::geometry::Box1;
use nbw_core::operator::Boundary;
use nbw_core::potential::{
    Background, Interaction, PotentialSpec, ProfileKind, SingleSite, SiteLayout,
};
use nbw_core::spectral::SpectrumWindow;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub system: SystemSection,
    pub potential: PotentialSection,
    pub disorder: DisorderSection,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub dimension: usize,
    pub particles: usize,
    pub boundary: String,
    pub points_per_unit: usize,
    /// Cube side; alternative to `sides`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    /// Per-factor sides for rectangles.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sides: Option<Vec<f64>>,
    /// Per-factor integer centers (defaults to the origin).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Vec<i64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_dimension: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    /// `cube`, `ball`, or `tent`.
    pub profile: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    /// Ball scale override; defaults to the profile's plateau radius capped
    /// at one half.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// `regular`, `crooked-jitter`, `crooked-alternating`, or `delone`.
    pub layout: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jitter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delone_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub include_remainder: Option<bool>,
    /// `none` or `pair`.
    #[serde(default = "default_none")]
    pub interaction: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_range: Option<f64>,
    /// `none` or `cosine`.
    #[serde(default = "default_none")]
    pub background: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background_amplitude: Option<f64>,
}

fn default_none() -> String {
    "none".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSection {
    /// `uniform`, `triangular`, `pwl`, `atomic`, or `constant`.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ys: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// `wegner1`, `wegner2`, `ids`, `ids-conv`, `lipschitz`, `ucp`,
    /// `delone-check`, or `selftest`.
    pub kind: String,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volumes: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_quantile: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_centers: Option<Vec<Vec<i64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_sides: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product_window: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conv_particles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_windows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delone_m: Option<f64>,
    #[serde(rename = "delone_M", skip_serializing_if = "Option::is_none")]
    pub delone_covering: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delone_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delone_box_side: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jitter_frac: Option<f64>,
}

fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    #[serde(default = "default_true")]
    pub raw: bool,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_true() -> bool {
    true
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into(), "report".into()]
}

/// Typed experiment plan resolved from a validated config.
#[derive(Debug, Clone)]
pub enum Plan {
    WegnerOne(Box<SystemSpec>, WegnerOneConfig),
    WegnerTwo(Box<SystemSpec>, Box<SystemSpec>, TwoVolumeConfig),
    Ids(Box<SystemSpec>, IdsConfig),
    IdsConv(Box<SystemSpec>, usize, ConvolutionConfig),
    Lipschitz(Box<SystemSpec>, LipschitzConfig),
    Ucp(Box<SystemSpec>, UcpConfig),
    DeloneCheck(DeloneCheckPlan),
    Selftest,
}

#[derive(Debug, Clone)]
pub struct DeloneCheckPlan {
    pub m: f64,
    pub covering: f64,
    pub dimension: usize,
    pub box_side: f64,
    pub count: usize,
    pub jitter_frac: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Parse(format!("{e}")))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "config schema {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    fn boundary(&self) -> Result<Boundary> {
        match self.system.boundary.as_str() {
            "dirichlet" => Ok(Boundary::Dirichlet),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidParameter(format!(
                "system.boundary must be \"dirichlet\" or \"periodic\", got {other:?}"
            ))),
        }
    }

    fn factors(&self) -> Result<Vec<Box1>> {
        let d = self.system.dimension;
        let n = self.system.particles;
        if d == 0 || n == 0 {
            return Err(Error::InvalidParameter(
                "system.dimension and system.particles must be at least 1".into(),
            ));
        }
        let sides: Vec<f64> = match (&self.system.side, &self.system.sides) {
            (Some(side), None) => vec![*side; n],
            (None, Some(sides)) => {
                if sides.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "system.sides has {} entries for {} particles",
                        sides.len(),
                        n
                    )));
                }
                sides.clone()
            }
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParameter(
                    "system.side and system.sides are mutually exclusive".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidParameter(
                    "one of system.side or system.sides is required".into(),
                ))
            }
        };
        let centers: Vec<Vec<i64>> = match &self.system.centers {
            Some(cs) => {
                if cs.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "system.centers has {} entries for {} particles",
                        cs.len(),
                        n
                    )));
                }
                cs.clone()
            }
            None => vec![vec![0; d]; n],
        };
        sides
            .iter()
            .zip(centers)
            .map(|(side, center)| {
                if center.len() != d {
                    return Err(Error::InvalidParameter(format!(
                        "center {center:?} does not have dimension {d}"
                    )));
                }
                Box1::new(center, *side)
            })
            .collect()
    }

    fn profile(&self) -> Result<SingleSite> {
        let d = self.system.dimension;
        let p = &self.potential;
        let kind = match p.profile.as_str() {
            "cube" => ProfileKind::Cube,
            "ball" => ProfileKind::Ball,
            "tent" => ProfileKind::Tent,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "potential.profile must be cube, ball, or tent, got {other:?}"
                )))
            }
        };
        match kind {
            ProfileKind::Ball => {
                let delta = p.delta.ok_or_else(|| {
                    Error::InvalidParameter("potential.delta is required for ball profiles".into())
                })?;
                SingleSite::ball(delta, d)
            }
            k => {
                let ell = p.ell.ok_or_else(|| {
                    Error::InvalidParameter(
                        "potential.ell is required for cube and tent profiles".into(),
                    )
                })?;
                match p.delta {
                    Some(delta) => SingleSite::new(k, ell, delta, d),
                    None => match k {
                        ProfileKind::Cube => SingleSite::cube(ell, d),
                        _ => SingleSite::tent(ell, d),
                    },
                }
            }
        }
    }

    fn layout(&self) -> Result<SiteLayout> {
        let p = &self.potential;
        match p.layout.as_str() {
            "regular" => Ok(SiteLayout::Regular),
            "crooked-jitter" => Ok(SiteLayout::CrookedJitter {
                amplitude: p.jitter.ok_or_else(|| {
                    Error::InvalidParameter(
                        "potential.jitter is required for crooked-jitter layouts".into(),
                    )
                })?,
                seed: p.layout_seed.unwrap_or(0),
            }),
            "crooked-alternating" => Ok(SiteLayout::CrookedAlternating {
                amplitude: p.offset.ok_or_else(|| {
                    Error::InvalidParameter(
                        "potential.offset is required for crooked-alternating layouts".into(),
                    )
                })?,
            }),
            "delone" => {
                let file = p.delone_file.as_ref().ok_or_else(|| {
                    Error::InvalidParameter(
                        "potential.delone_file is required for delone layouts".into(),
                    )
                })?;
                let text = std::fs::read_to_string(file)
                    .map_err(|e| Error::Parse(format!("cannot read {file}: {e}")))?;
                let set = DeloneSet::from_text(&text, None)?;
                let split = nbw_core::disorder::split_delone(&set)?;
                Ok(SiteLayout::Delone {
                    cell_scale: set.covering,
                    cells: split.gamma1_cells.into_iter().collect::<BTreeMap<_, _>>(),
                    extra: split.gamma2,
                    include_extra: p.include_remainder.unwrap_or(true),
                })
            }
            other => Err(Error::InvalidParameter(format!(
                "potential.layout must be regular, crooked-jitter, crooked-alternating, \
                 or delone, got {other:?}"
            ))),
        }
    }

    fn interaction(&self) -> Result<Interaction> {
        let p = &self.potential;
        match p.interaction.as_str() {
            "none" => Ok(Interaction::None),
            "pair" => {
                let inter = Interaction::Pair {
                    amplitude: p.pair_amplitude.ok_or_else(|| {
                        Error::InvalidParameter(
                            "potential.pair_amplitude is required for pair interactions".into(),
                        )
                    })?,
                    range: p.pair_range.ok_or_else(|| {
                        Error::InvalidParameter(
                            "potential.pair_range is required for pair interactions".into(),
                        )
                    })?,
                };
                inter.validate()?;
                Ok(inter)
            }
            other => Err(Error::InvalidParameter(format!(
                "potential.interaction must be none or pair, got {other:?}"
            ))),
        }
    }

    fn background(&self) -> Result<Background> {
        match self.potential.background.as_str() {
            "none" => Ok(Background::None),
            "cosine" => Ok(Background::Cosine {
                amplitude: self.potential.background_amplitude.ok_or_else(|| {
                    Error::InvalidParameter(
                        "potential.background_amplitude is required for cosine backgrounds".into(),
                    )
                })?,
            }),
            other => Err(Error::InvalidParameter(format!(
                "potential.background must be none or cosine, got {other:?}"
            ))),
        }
    }

    fn coupling(&self) -> Result<CouplingDistribution> {
        let d = &self.disorder;
        match d.kind.as_str() {
            "uniform" => CouplingDistribution::uniform(
                d.a.ok_or_else(|| Error::InvalidParameter("disorder.a is required".into()))?,
                d.b.ok_or_else(|| Error::InvalidParameter("disorder.b is required".into()))?,
            ),
            "triangular" => CouplingDistribution::triangular(
                d.a.ok_or_else(|| Error::InvalidParameter("disorder.a is required".into()))?,
                d.b.ok_or_else(|| Error::InvalidParameter("disorder.b is required".into()))?,
            ),
            "pwl" => CouplingDistribution::piecewise_linear(
                d.xs.clone()
                    .ok_or_else(|| Error::InvalidParameter("disorder.xs is required".into()))?,
                d.ys.clone()
                    .ok_or_else(|| Error::InvalidParameter("disorder.ys is required".into()))?,
            ),
            "atomic" => {
                let atoms = d
                    .atoms
                    .clone()
                    .ok_or_else(|| Error::InvalidParameter("disorder.atoms is required".into()))?;
                let pairs: Vec<(f64, f64)> = atoms
                    .into_iter()
                    .map(|pair| {
                        if pair.len() != 2 {
                            Err(Error::InvalidParameter(
                                "disorder.atoms entries must be [position, mass] pairs".into(),
                            ))
                        } else {
                            Ok((pair[0], pair[1]))
                        }
                    })
                    .collect::<Result<_>>()?;
                CouplingDistribution::atomic(pairs)
            }
            "constant" => CouplingDistribution::degenerate(
                d.value
                    .ok_or_else(|| Error::InvalidParameter("disorder.value is required".into()))?,
            ),
            other => Err(Error::InvalidParameter(format!(
                "disorder.kind must be uniform, triangular, pwl, atomic, or constant, got {other:?}"
            ))),
        }
    }

    pub fn system(&self) -> Result<SystemSpec> {
        Ok(SystemSpec {
            d: self.system.dimension,
            factors: self.factors()?,
            boundary: self.boundary()?,
            points_per_unit: self.system.points_per_unit,
            potential: PotentialSpec {
                profile: self.profile()?,
                layout: self.layout()?,
                interaction: self.interaction()?,
                background: self.background()?,
            },
            disorder: self.coupling()?,
            max_dimension: self
                .system
                .max_dimension
                .unwrap_or(nbw_core::operator::DEFAULT_DIMENSION_CAP),
        })
    }

    fn energy_grid(&self) -> Result<EnergyGrid> {
        let e = &self.experiment;
        EnergyGrid::new(
            e.energy_min.ok_or_else(|| {
                Error::InvalidParameter("experiment.energy_min is required".into())
            })?,
            e.energy_max.ok_or_else(|| {
                Error::InvalidParameter("experiment.energy_max is required".into())
            })?,
            e.energy_step.ok_or_else(|| {
                Error::InvalidParameter("experiment.energy_step is required".into())
            })?,
        )
    }

    /// Full validation and conversion into a typed plan.
    pub fn plan(&self) -> Result<Plan> {
        let e = &self.experiment;
        match e.kind.as_str() {
            "selftest" => Ok(Plan::Selftest),
            "wegner1" => {
                let sys = self.system()?;
                let volumes = e.volumes.clone().unwrap_or_else(|| {
                    vec![sys.factors.first().map(|f| f.side()).unwrap_or(1.0)]
                });
                let center = match (e.center_energy, e.center_quantile) {
                    (Some(energy), _) => WindowCenter::Fixed(energy),
                    (None, q) => WindowCenter::Quantile(q.unwrap_or(0.05)),
                };
                if let Some(e0) = e.e0 {
                    if let WindowCenter::Fixed(c) = center {
                        let max_width = e
                            .widths
                            .as_ref()
                            .and_then(|w| w.iter().copied().reduce(f64::max))
                            .unwrap_or(0.0);
                        if c + 0.5 * max_width > e0 {
                            return Err(Error::InvalidParameter(format!(
                                "experiment.center_energy {c} plus half the widest window \
                                 exceeds experiment.e0 = {e0}"
                            )));
                        }
                    }
                }
                Ok(Plan::WegnerOne(
                    Box::new(sys),
                    WegnerOneConfig {
                        volumes,
                        widths: e.widths.clone().ok_or_else(|| {
                            Error::InvalidParameter("experiment.widths is required".into())
                        })?,
                        center,
                        trials: e.trials,
                        seed: self.disorder.seed,
                    },
                ))
            }
            "wegner2" => {
                let sys_a = self.system()?;
                let mut sys_b = sys_a.clone();
                let centers_b = e.second_centers.clone().ok_or_else(|| {
                    Error::InvalidParameter(
                        "experiment.second_centers is required for wegner2".into(),
                    )
                })?;
                let sides_b = e
                    .second_sides
                    .clone()
                    .unwrap_or_else(|| sys_a.factors.iter().map(|f| f.side()).collect());
                if centers_b.len() != sys_a.particles() || sides_b.len() != sys_a.particles() {
                    return Err(Error::InvalidParameter(
                        "second box must have one center and side per particle".into(),
                    ));
                }
                sys_b.factors = centers_b
                    .into_iter()
                    .zip(sides_b)
                    .map(|(c, s)| Box1::new(c, s))
                    .collect::<Result<_>>()?;
                let e0 = e.e0.ok_or_else(|| {
                    Error::InvalidParameter("experiment.e0 is required for wegner2".into())
                })?;
                let separation_r = e.separation_r.ok_or_else(|| {
                    Error::InvalidParameter(
                        "experiment.separation_r is required for wegner2 (the separation length \
                         must bound the single-site support)"
                            .into(),
                    )
                })?;
                let product_window = match &e.product_window {
                    None => None,
                    Some(v) if v.len() == 2 => {
                        let w = SpectrumWindow::new(v[0], v[1])?;
                        if w.hi > e0 {
                            return Err(Error::InvalidParameter(format!(
                                "experiment.product_window top {} exceeds experiment.e0 = {e0}",
                                w.hi
                            )));
                        }
                        Some(w)
                    }
                    Some(_) => {
                        return Err(Error::InvalidParameter(
                            "experiment.product_window must be [lo, hi]".into(),
                        ))
                    }
                };
                Ok(Plan::WegnerTwo(
                    Box::new(sys_a),
                    Box::new(sys_b),
                    TwoVolumeConfig {
                        epsilons: e.epsilons.clone().ok_or_else(|| {
                            Error::InvalidParameter("experiment.epsilons is required".into())
                        })?,
                        e0,
                        separation_r,
                        trials: e.trials,
                        seed: self.disorder.seed,
                        product_window,
                    },
                ))
            }
            "ids" => Ok(Plan::Ids(
                Box::new(self.system()?),
                IdsConfig {
                    grid: self.energy_grid()?,
                    trials: e.trials,
                    seed: self.disorder.seed,
                },
            )),
            "ids-conv" => Ok(Plan::IdsConv(
                Box::new(self.system()?),
                e.conv_particles.ok_or_else(|| {
                    Error::InvalidParameter("experiment.conv_particles is required".into())
                })?,
                ConvolutionConfig {
                    grid: self.energy_grid()?,
                    trials: e.trials,
                    seed: self.disorder.seed,
                },
            )),
            "lipschitz" => Ok(Plan::Lipschitz(
                Box::new(self.system()?),
                LipschitzConfig {
                    volumes: e.volumes.clone().ok_or_else(|| {
                        Error::InvalidParameter("experiment.volumes is required".into())
                    })?,
                    grid: self.energy_grid()?,
                    trials: e.trials,
                    seed: self.disorder.seed,
                },
            )),
            "ucp" => Ok(Plan::Ucp(
                Box::new(self.system()?),
                UcpConfig {
                    volumes: e.volumes.clone().ok_or_else(|| {
                        Error::InvalidParameter("experiment.volumes is required".into())
                    })?,
                    window_width: e.window_width.ok_or_else(|| {
                        Error::InvalidParameter("experiment.window_width is required".into())
                    })?,
                    e0: e.e0.ok_or_else(|| {
                        Error::InvalidParameter("experiment.e0 is required for ucp".into())
                    })?,
                    n_windows: e.n_windows.unwrap_or(4),
                    trials: e.trials,
                    seed: self.disorder.seed,
                    m_d_for_cap: e.m_d.unwrap_or(1.0),
                },
            )),
            "delone-check" => Ok(Plan::DeloneCheck(DeloneCheckPlan {
                m: e.delone_m.ok_or_else(|| {
                    Error::InvalidParameter("experiment.delone_m is required".into())
                })?,
                covering: e.delone_covering.ok_or_else(|| {
                    Error::InvalidParameter("experiment.delone_M is required".into())
                })?,
                dimension: self.system.dimension,
                box_side: e.delone_box_side.unwrap_or(0.0),
                count: e.delone_count.unwrap_or(100),
                jitter_frac: e.jitter_frac.unwrap_or(1.0),
                seed: self.disorder.seed,
            })),
            other => Err(Error::InvalidParameter(format!(
                "experiment.kind {other:?} is not one of wegner1, wegner2, ids, ids-conv, \
                 lipschitz, ucp, delone-check, selftest"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn minimal_wegner1() -> String {
        r#"
schema = 1
[system]
dimension = 1
particles = 1
boundary = "dirichlet"
points_per_unit = 2
side = 10.0
[potential]
profile = "cube"
ell = 1.0
layout = "regular"
[disorder]
kind = "uniform"
a = 0.0
b = 1.0
seed = 7
[experiment]
kind = "wegner1"
trials = 3
widths = [0.02]
[output]
dir = "out"
"#
        .to_string()
    }

    #[test]
    fn parses_and_plans_minimal_config() {
        let cfg: ExperimentConfig = toml::from_str(&minimal_wegner1()).unwrap();
        let plan = cfg.plan().unwrap();
        assert!(matches!(plan, Plan::WegnerOne(..)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = minimal_wegner1().replace("side = 10.0", "side = 10.0\nbogus_key = 1");
        let err = toml::from_str::<ExperimentConfig>(&text).unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn oversized_delta_is_rejected_with_the_range_constraint() {
        let text = minimal_wegner1().replace("ell = 1.0", "ell = 1.0\ndelta = 0.9");
        let cfg: ExperimentConfig = toml::from_str(&text).unwrap();
        let err = cfg.plan().unwrap_err();
        assert!(
            err.to_string().contains("(0, 0.5]"),
            "message must cite the admissible range: {err}"
        );
    }

    #[test]
    fn wegner2_requires_separation_length() {
        let text = minimal_wegner1()
            .replace("kind = \"wegner1\"", "kind = \"wegner2\"")
            .replace(
                "widths = [0.02]",
                "epsilons = [0.01]\ne0 = 10.0\nsecond_centers = [[6]]",
            );
        let cfg: ExperimentConfig = toml::from_str(&text).unwrap();
        let err = cfg.plan().unwrap_err();
        assert!(err.to_string().contains("separation_r"), "{err}");
    }
}
