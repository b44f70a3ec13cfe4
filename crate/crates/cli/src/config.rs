use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use stochtex::{Filter, KernelSpec, ShadingMap, StochFilter, VolumeFilter};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "stochtex", version, about = "Stochastic texture filtering experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rescale an image with a deterministic or stochastic filter.
    Resample(ExperimentArgs),
    /// Error of each estimator against its deterministic filter as spp grows.
    Converge(ExperimentArgs),
    /// Compare filtering before and after a nonlinear shading map.
    Order(ExperimentArgs),
    /// Fetch counts and image MSE for volume filters on a projected volume.
    Volume(ExperimentArgs),
    /// Compress an image to DCT blocks and count decodes per filter.
    Dct(ExperimentArgs),
    /// Run a configuration printed by --dump-config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Resample,
    Converge,
    Order,
    Volume,
    Dct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FilterName {
    Bilinear,
    Trilinear,
    BicubicBspline,
    TricubicBspline,
    BicubicKeys,
    Gaussian,
    Ewa,
    TrilinearMip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Det,
    Stoch,
    Fis,
}

/// Flags shared by every experiment. Unset values take per-command
/// defaults when resolved into an [`ExperimentConfig`].
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// Input image (.png, .pfm) or volume (.stxv); `fixture:high-contrast`
    /// and `fixture:puff` name the built-in assets.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output image, or compressed file for `dct`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub filter: Option<FilterName>,
    #[arg(long, value_enum)]
    pub estimator: Option<Estimator>,
    /// Samples per pixel or query; the maximum N for `converge`.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub spp: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gaussian standard deviation in texels.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub keys_a: Option<f64>,
    /// Output size over input size.
    #[arg(long)]
    pub scale: Option<f64>,
    /// identity | affine:a,b | power:k | exp:s | planck[:c] | threshold:t | metalness:d,s
    #[arg(long)]
    pub map: Option<String>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Samples per pixel of the reference image in `volume`.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub ref_spp: Option<u32>,
    /// Side of the projected image in `volume`.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub size: Option<u32>,
    /// Queries per axis for `order` and `converge`.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub grid: Option<u32>,
    /// Keep 8-bit inputs sRGB encoded instead of linearizing.
    #[arg(long)]
    pub raw: bool,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    pub dump_config: bool,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    /// Explicit filter choice; commands that sweep filters run all when
    /// absent.
    pub filter: Option<FilterName>,
    pub estimator: Estimator,
    pub spp: u32,
    pub seed: u64,
    pub sigma: f64,
    pub keys_a: f64,
    pub scale: f64,
    pub map: ShadingMap,
    pub ref_spp: u32,
    pub size: u32,
    pub grid: u32,
    pub raw: bool,
}

impl ExperimentConfig {
    pub fn resolve(command: CommandKind, args: &ExperimentArgs) -> Result<Self, CliError> {
        let default_spp = match command {
            CommandKind::Resample => 16,
            CommandKind::Converge => 4096,
            CommandKind::Order => 10_000,
            CommandKind::Volume => 256,
            CommandKind::Dct => 16,
        };
        let default_map = match command {
            CommandKind::Order => ShadingMap::PlanckLike {
                c: stochtex::shading::DEFAULT_PLANCK_C,
            },
            _ => ShadingMap::Identity,
        };
        let map = match &args.map {
            Some(s) => s.parse().map_err(|e| CliError::Usage(format!("--map: {e}")))?,
            None => default_map,
        };
        let cfg = ExperimentConfig {
            command,
            input: args.input.clone(),
            output: args.output.clone(),
            csv: args.csv.clone(),
            filter: args.filter,
            estimator: args.estimator.unwrap_or(Estimator::Stoch),
            spp: args.spp.unwrap_or(default_spp),
            seed: args.seed.unwrap_or(0),
            sigma: args.sigma.unwrap_or(0.5),
            keys_a: args.keys_a.unwrap_or(-0.5),
            scale: args.scale.unwrap_or(1.0),
            map,
            ref_spp: args.ref_spp.unwrap_or(16_384),
            size: args.size.unwrap_or(64),
            grid: args.grid.unwrap_or(match command {
                CommandKind::Converge => 8,
                _ => 16,
            }),
            raw: args.raw,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: &str| Err(CliError::Usage(m.to_string()));
        if self.spp == 0 || self.ref_spp == 0 || self.size == 0 || self.grid == 0 {
            return usage("--spp, --ref-spp, --size and --grid must be positive");
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return usage("--scale must be a positive number");
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return usage("--sigma must be a positive number");
        }
        if !self.keys_a.is_finite() {
            return usage("--keys-a must be finite");
        }
        self.map.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn gaussian(&self) -> KernelSpec {
        KernelSpec::gaussian(self.sigma)
    }

    /// The deterministic 2D filter for `name`.
    pub fn filter_2d(&self, name: FilterName) -> Result<Filter, CliError> {
        Ok(match name {
            FilterName::Bilinear => Filter::Bilinear,
            FilterName::BicubicBspline => Filter::BicubicBSpline,
            FilterName::BicubicKeys => Filter::BicubicKeys { a: self.keys_a },
            FilterName::Gaussian => match self.gaussian() {
                KernelSpec::Gaussian { sigma, radius } => Filter::Gaussian { sigma, radius },
                _ => unreachable!(),
            },
            FilterName::Ewa => Filter::Ewa,
            FilterName::TrilinearMip => Filter::TrilinearMip,
            FilterName::Trilinear | FilterName::TricubicBspline => {
                return Err(CliError::Usage(format!(
                    "filter '{}' works on volumes; use the volume command",
                    name.label()
                )))
            }
        })
    }

    /// Reference filter and optional estimator for `name` under the chosen
    /// estimator kind. FIS estimators pair with the filter they realize.
    pub fn estimator_2d(&self, name: FilterName) -> Result<(Filter, Option<StochFilter>), CliError> {
        let det = self.filter_2d(name)?;
        Ok(match self.estimator {
            Estimator::Det => (det, None),
            Estimator::Stoch => (det, Some(StochFilter::from(det))),
            Estimator::Fis => {
                let realized = match name {
                    FilterName::Bilinear => Filter::FisBSpline { degree: 1 },
                    FilterName::BicubicBspline => Filter::FisBSpline { degree: 3 },
                    FilterName::Gaussian => Filter::FisGaussian { sigma: self.sigma },
                    _ => {
                        return Err(CliError::Usage(format!(
                            "no filter-importance-sampling estimator for '{}'",
                            name.label()
                        )))
                    }
                };
                (realized, Some(StochFilter::from(realized)))
            }
        })
    }

    pub fn volume_filter(name: FilterName) -> Result<VolumeFilter, CliError> {
        match name {
            FilterName::Trilinear => Ok(VolumeFilter::Trilinear),
            FilterName::TricubicBspline => Ok(VolumeFilter::TricubicBSpline),
            other => Err(CliError::Usage(format!(
                "filter '{}' does not apply to volumes",
                other.label()
            ))),
        }
    }
}

impl FilterName {
    pub fn label(&self) -> &'static str {
        match self {
            FilterName::Bilinear => "bilinear",
            FilterName::Trilinear => "trilinear",
            FilterName::BicubicBspline => "bicubic-bspline",
            FilterName::TricubicBspline => "tricubic-bspline",
            FilterName::BicubicKeys => "bicubic-keys",
            FilterName::Gaussian => "gaussian",
            FilterName::Ewa => "ewa",
            FilterName::TrilinearMip => "trilinear-mip",
        }
    }
}

impl Estimator {
    pub fn label(&self) -> &'static str {
        match self {
            Estimator::Det => "det",
            Estimator::Stoch => "stoch",
            Estimator::Fis => "fis",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let args = ExperimentArgs {
            input: Some("in.png".into()),
            filter: Some(FilterName::BicubicKeys),
            estimator: Some(Estimator::Stoch),
            spp: Some(64),
            keys_a: Some(-0.75),
            map: Some("threshold:0.25".into()),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve(CommandKind::Resample, &args).unwrap();
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json(), cfg.to_json());
    }

    #[test]
    fn usage_errors() {
        let bad_map = ExperimentArgs {
            map: Some("cubic:3".into()),
            ..Default::default()
        };
        assert!(matches!(
            ExperimentConfig::resolve(CommandKind::Order, &bad_map),
            Err(CliError::Usage(_))
        ));
        let bad_scale = ExperimentArgs {
            scale: Some(0.0),
            ..Default::default()
        };
        assert!(ExperimentConfig::resolve(CommandKind::Resample, &bad_scale).is_err());
        let cfg = ExperimentConfig::resolve(CommandKind::Resample, &ExperimentArgs::default()).unwrap();
        assert!(cfg.filter_2d(FilterName::TricubicBspline).is_err());
        let fis = ExperimentConfig {
            estimator: Estimator::Fis,
            ..cfg
        };
        assert!(fis.estimator_2d(FilterName::Ewa).is_err());
        assert_eq!(
            fis.estimator_2d(FilterName::BicubicBspline).unwrap().1,
            Some(StochFilter::FisBSpline { degree: 3 })
        );
    }
}
