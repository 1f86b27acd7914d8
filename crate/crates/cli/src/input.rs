//! Domain arguments: a mask file path, or `builtin:NAME[:key=value,...]`.

use std::path::Path;

use anyhow::{anyhow, bail, Context};

use shapeflow::io;
use shapeflow::shapes::{self, Builtin};
use shapeflow::{Grid, RasterDomain};

use crate::config::GridSection;

const PREFIX: &str = "builtin:";

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    File(String),
    Builtin(Builtin),
}

impl DomainSpec {
    pub fn parse(arg: &str) -> anyhow::Result<Self> {
        let Some(rest) = arg.strip_prefix(PREFIX) else {
            return Ok(DomainSpec::File(arg.to_string()));
        };
        let (name, params) = match rest.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (rest, None),
        };
        let mut shape = Builtin::by_name(name)?;
        if let Some(params) = params {
            shape = with_params(shape, params)?;
        }
        Ok(DomainSpec::Builtin(shape))
    }
}

/// Overrides numeric fields of a built-in shape, e.g. `depth=1.5,notch_width=0.5`.
fn with_params(shape: Builtin, params: &str) -> anyhow::Result<Builtin> {
    let mut value = serde_json::to_value(&shape)?;
    let obj = value.as_object_mut().expect("builtins serialize as maps");
    for kv in params.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value, got '{kv}'"))?;
        let (k, v) = (k.trim(), v.trim());
        if k == "kind" || !obj.contains_key(k) {
            let keys: Vec<_> = obj.keys().filter(|k| *k != "kind").collect();
            bail!("unknown parameter '{k}', expected one of {keys:?}");
        }
        let x: f64 = v.parse().with_context(|| format!("parameter {k}: '{v}' is not a number"))?;
        obj.insert(k.to_string(), serde_json::json!(x));
    }
    Ok(serde_json::from_value(value)?)
}

fn builtin_grid(shapes: &[&Builtin], cfg: &GridSection) -> anyhow::Result<Grid> {
    if let (Some(nx), Some(ny)) = (cfg.nx, cfg.ny) {
        return Ok(Grid::centered(nx, ny, cfg.h)?);
    }
    let half = shapes
        .iter()
        .map(|s| {
            let [a, b] = s.half_extent();
            (a * a + b * b).sqrt()
        })
        .fold(0.0, f64::max)
        + cfg.margin;
    let g = shapes::centered_grid(half, half, cfg.h)?;
    Ok(Grid::centered(cfg.nx.unwrap_or(g.nx), cfg.ny.unwrap_or(g.ny), cfg.h)?)
}

/// Loads domains that must share a grid.
///
/// Built-in shapes are rasterized on the grid of the first file argument if
/// there is one, otherwise on a grid sized for all of them.
pub fn load_all(specs: &[DomainSpec], grid_cfg: &GridSection) -> anyhow::Result<Vec<RasterDomain>> {
    let mut files = Vec::new();
    for s in specs {
        if let DomainSpec::File(p) = s {
            files.push(
                io::load_domain(Path::new(p)).with_context(|| format!("loading domain {p}"))?,
            );
        }
    }
    let builtins: Vec<&Builtin> = specs
        .iter()
        .filter_map(|s| match s {
            DomainSpec::Builtin(b) => Some(b),
            DomainSpec::File(_) => None,
        })
        .collect();
    let grid = match files.first() {
        Some(d) => *d.grid(),
        None if builtins.is_empty() => return Ok(files),
        None => builtin_grid(&builtins, grid_cfg)?,
    };
    let mut files = files.into_iter();
    let mut out = Vec::with_capacity(specs.len());
    for s in specs {
        out.push(match s {
            DomainSpec::File(_) => files.next().expect("loaded above"),
            DomainSpec::Builtin(b) => b.build(grid)?,
        });
    }
    for d in &out[1..] {
        out[0].grid().ensure_matches(d.grid())?;
    }
    if let Some(d) = out.iter().find(|d| d.is_empty()) {
        bail!("domain on grid {}x{} is empty", d.grid().nx, d.grid().ny);
    }
    Ok(out)
}

pub fn load_one(spec: &DomainSpec, grid_cfg: &GridSection) -> anyhow::Result<RasterDomain> {
    Ok(load_all(std::slice::from_ref(spec), grid_cfg)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use shapeflow::shapes::Notched;

    #[test]
    fn parses_builtin_with_params() {
        let s = DomainSpec::parse("builtin:notched:depth=1.5,notch_width=0.5").unwrap();
        let DomainSpec::Builtin(Builtin::Notched(n)) = s else { panic!("{s:?}") };
        assert_eq!(n.depth, 1.5);
        assert_eq!(n.notch_width, 0.5);
        assert_eq!(n.width, Notched::default().width);
    }

    #[test]
    fn rejects_unknown_params_and_names() {
        assert!(DomainSpec::parse("builtin:disk:radius=2").is_err());
        assert!(DomainSpec::parse("builtin:disk:r=abc").is_err());
        assert!(DomainSpec::parse("builtin:torus").is_err());
        assert_eq!(
            DomainSpec::parse("shape.txt").unwrap(),
            DomainSpec::File("shape.txt".into())
        );
    }

    #[test]
    fn builtins_share_a_grid() {
        let cfg = GridSection {
            h: 1.0 / 8.0,
            ..GridSection::default()
        };
        let specs = [
            DomainSpec::parse("builtin:square").unwrap(),
            DomainSpec::parse("builtin:disk").unwrap(),
        ];
        let d = load_all(&specs, &cfg).unwrap();
        assert!(d[0].grid().matches(d[1].grid()));
        assert_eq!(d[0].cell_count(), 64);
    }
}
