//! Small argument grammars: grids, ranges, block and curve lists.

use lndimer::rovib::{Block, LParity};
use lndimer::spintensor::Inversion;
use lndimer::{Species, TensorOp};

use crate::error::Failure;

const MAX_POINTS: usize = 10_000_000;

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, Failure> {
    s.trim().parse().map_err(|_| Failure::validation(format!("{what}: cannot parse {s:?}")))
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn grid(arg: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = arg.split(':').collect();
    let [a, b, h] = parts[..] else {
        return Err(Failure::validation(format!("grid {arg:?} must be start:stop:step")));
    };
    let (a, b, h): (f64, f64, f64) = (num(a, "grid")?, num(b, "grid")?, num(h, "grid")?);
    if !(a.is_finite() && b.is_finite() && h.is_finite()) || h <= 0.0 || b < a {
        return Err(Failure::validation(format!("grid {arg:?} needs start <= stop and step > 0")));
    }
    let steps = ((b - a) / h + 1e-9).floor();
    if steps >= MAX_POINTS as f64 {
        return Err(Failure::validation(format!("grid {arg:?} has more than {MAX_POINTS} points")));
    }
    // rounding keeps 6 + 3*0.1 printing as 6.3
    Ok((0..=steps as usize).map(|i| ((a + i as f64 * h) * 1e10).round() / 1e10).collect())
}

pub fn list(arg: &str) -> Result<Vec<f64>, Failure> {
    arg.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(s, "separation")).collect()
}

/// `J` or `Jmin:Jmax`.
pub fn j_range(arg: &str) -> Result<Vec<u32>, Failure> {
    match arg.split_once(':') {
        None => Ok(vec![num(arg, "J")?]),
        Some((a, b)) => {
            let (a, b): (u32, u32) = (num(a, "J")?, num(b, "J")?);
            if b < a {
                return Err(Failure::validation(format!("J range {arg:?} is empty")));
            }
            Ok((a..=b).collect())
        }
    }
}

fn block(s: &str) -> Result<Block, Failure> {
    let err = || Failure::validation(format!("block {s:?} must look like g/even or u/odd"));
    let t = s.trim().to_ascii_lowercase();
    let t = t.strip_suffix("-l").unwrap_or(&t);
    let (inv, par) = t.split_once(['/', '-']).ok_or_else(err)?;
    let inversion = match inv {
        "g" => Inversion::Gerade,
        "u" => Inversion::Ungerade,
        _ => return Err(err()),
    };
    let l_parity = match par {
        "even" => LParity::Even,
        "odd" => LParity::Odd,
        _ => return Err(err()),
    };
    Ok(Block::new(inversion, l_parity))
}

pub fn blocks(arg: &str, species: Species) -> Result<Vec<Block>, Failure> {
    use Inversion::*;
    use LParity::*;
    let mut out = match arg.trim() {
        "physical" => Block::physical(species),
        "all" => vec![
            Block::new(Gerade, Even),
            Block::new(Gerade, Odd),
            Block::new(Ungerade, Even),
            Block::new(Ungerade, Odd),
        ],
        s => s.split(',').map(block).collect::<Result<Vec<_>, _>>()?,
    };
    out.sort();
    out.dedup();
    for b in &out {
        if !Block::physical(species).contains(b) {
            log::warn!("block {b} is forbidden by exchange symmetry for {species}");
        }
    }
    Ok(out)
}

/// A curve selected for sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Curve {
    Vss,
    Strength(TensorOp),
}

impl Curve {
    pub fn name(self) -> String {
        match self {
            Curve::Vss => "vss".into(),
            Curve::Strength(op) => format!("v{}_{}", op.k, op.i),
        }
    }
}

pub fn curves(arg: &str) -> Result<Vec<Curve>, Failure> {
    let all: Vec<Curve> = std::iter::once(Curve::Vss).chain(TensorOp::ALL.map(Curve::Strength)).collect();
    let mut out = Vec::new();
    for s in arg.split(',').map(|s| s.trim().to_ascii_lowercase()) {
        match s.as_str() {
            "all" => out.extend(all.iter().copied()),
            "v0" => out.push(Curve::Strength(TensorOp::ISO)),
            "v2" => out.push(Curve::Strength(TensorOp::ANISO)),
            name => out.push(*all.iter().find(|c| c.name() == name).ok_or_else(|| {
                let names: Vec<String> = all.iter().map(|c| c.name()).collect();
                Failure::validation(format!("unknown curve {name:?} (one of {}, v0, v2, all)", names.join(", ")))
            })?),
        }
    }
    let mut seen = Vec::new();
    out.retain(|c| {
        let new = !seen.contains(c);
        seen.push(*c);
        new
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_end_and_rounds() {
        let g = grid("6:7:0.1").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 6.3);
        assert_eq!(*g.last().unwrap(), 7.0);
        assert_eq!(grid("5:5:1").unwrap(), vec![5.0]);
        for bad in ["6:7", "7:6:0.1", "6:7:0", "6:7:-1", "a:7:1", "6:7:nan"] {
            assert!(grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn j_ranges() {
        assert_eq!(j_range("3").unwrap(), vec![3]);
        assert_eq!(j_range("0:2").unwrap(), vec![0, 1, 2]);
        assert!(j_range("2:1").is_err());
        assert!(j_range("-1").is_err());
    }

    #[test]
    fn block_lists() {
        assert_eq!(blocks("physical", Species::Er).unwrap(), Block::physical(Species::Er));
        assert_eq!(blocks("all", Species::Er).unwrap().len(), 4);
        let b = blocks("u/odd, g/even-l,g-even", Species::Tm).unwrap();
        assert_eq!(b, vec![Block::new(Inversion::Gerade, LParity::Even), Block::new(Inversion::Ungerade, LParity::Odd)]);
        assert!(blocks("x/even", Species::Tm).is_err());
        assert!(blocks("g", Species::Tm).is_err());
    }

    #[test]
    fn curve_names() {
        assert_eq!(curves("all").unwrap().len(), 8);
        assert_eq!(curves("v2").unwrap(), vec![Curve::Strength(TensorOp::ANISO)]);
        assert_eq!(curves("vss,v0,v0_1").unwrap().len(), 2);
        assert_eq!(curves("v4_1").unwrap()[0].name(), "v4_1");
        assert!(curves("v9_9").is_err());
    }
}
