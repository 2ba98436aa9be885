//! Text descriptions of prepared states, e.g. `ghz:6` or `random:3:7`.

use qverify_core::qsim::{Basis, QuantumState};
use qverify_core::rng::Seed;
use qverify_core::C64;

use crate::error::{QvError, QvResult};

pub const STATE_SPEC_HELP: &str = "zero:N | plus:N | ghz:N | ghzm:N | random:N:SEED | mixed:N:RANK:SEED | maxmixed:N";

fn bad(spec: &str, why: &str) -> QvError {
    QvError::Usage(format!("state {spec:?}: {why} (expected {STATE_SPEC_HELP})"))
}

pub fn parse_state(spec: &str) -> QvResult<QuantumState> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |i: usize| -> QvResult<u64> {
        parts
            .get(i)
            .ok_or_else(|| bad(spec, "missing field"))?
            .parse()
            .map_err(|_| bad(spec, "expected an integer"))
    };
    let n = num(1)? as usize;
    let arity = match parts[0] {
        "random" => 3,
        "mixed" => 4,
        _ => 2,
    };
    if parts.len() != arity {
        return Err(bad(spec, "wrong number of fields"));
    }
    let basis = Basis::qubits(n)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ok(match parts[0] {
        "zero" => QuantumState::zero(n)?,
        "plus" => QuantumState::product(&vec![[C64::new(h, 0.0), C64::new(h, 0.0)]; n])?,
        "ghz" => QuantumState::ghz(n)?,
        "ghzm" => {
            let mut v = vec![C64::new(0.0, 0.0); 1 << n];
            v[0] = C64::new(h, 0.0);
            v[(1 << n) - 1] = C64::new(-h, 0.0);
            QuantumState::pure(basis, v)?
        }
        "random" => QuantumState::random_pure(basis, Seed(num(2)?)),
        "mixed" => QuantumState::random_mixed(basis, num(2)? as usize, Seed(num(3)?))?,
        "maxmixed" => QuantumState::maximally_mixed(basis)?,
        _ => return Err(bad(spec, "unknown kind")),
    })
}

/// Comma-separated amplitudes, each `re` or `re:im`, normalized.
pub fn parse_amplitudes(text: &str) -> QvResult<QuantumState> {
    let amps = text
        .split(',')
        .map(|a| {
            let mut it = a.trim().splitn(2, ':');
            let re: f64 = it.next().unwrap_or("").parse().map_err(|_| QvError::Usage(format!("bad amplitude {a:?}")))?;
            let im: f64 = match it.next() {
                Some(s) => s.parse().map_err(|_| QvError::Usage(format!("bad amplitude {a:?}")))?,
                None => 0.0,
            };
            Ok(C64::new(re, im))
        })
        .collect::<QvResult<Vec<_>>>()?;
    if !amps.len().is_power_of_two() || amps.len() < 2 {
        return Err(QvError::Usage(format!("{} amplitudes do not form a qubit register", amps.len())));
    }
    let n = amps.len().trailing_zeros() as usize;
    Ok(QuantumState::pure_normalized(Basis::qubits(n)?, amps)?)
}

/// `0,1,2` style qubit list.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> QvResult<Vec<T>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| QvError::Usage(format!("bad {what} {s:?}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs() {
        assert_eq!(parse_state("ghz:3").unwrap().dim(), 8);
        assert!(parse_state("mixed:2:2:5").unwrap().purity() < 1.0);
        let m = parse_state("ghzm:2").unwrap();
        assert!(m.overlap(&parse_state("ghz:2").unwrap()).unwrap().abs() < 1e-15);
        assert!(parse_state("ghz").is_err());
        assert!(parse_state("nope:2").is_err());
        assert!(parse_state("random:2").is_err());
    }

    #[test]
    fn amplitudes() {
        let s = parse_amplitudes("3,0:4").unwrap();
        let a = s.amplitudes().unwrap();
        assert!((a[1].im - 0.8).abs() < 1e-15);
        assert!(parse_amplitudes("1,0,0").is_err());
        assert_eq!(parse_list::<usize>("0, 2,5", "qubit").unwrap(), vec![0, 2, 5]);
    }
}
