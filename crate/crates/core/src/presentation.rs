//! Finite presentations of the Bianchi groups SL2(O_D) for the five
//! norm-Euclidean fields, shipped as data and verified on load: every relator
//! must evaluate to the exact identity matrix, and the abelianization must
//! match the independently computed fixture recorded in the data file.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::mat2::{parse_mat2, Mat2};
use crate::quadfield::FieldDescriptor;
use crate::snf::{smith_normal_form, SparseIntMatrix};
use crate::words::{evaluate, format_word, Word};

#[derive(Debug, Clone)]
pub struct GroupPresentation {
    pub field: FieldDescriptor,
    pub gen_names: Vec<String>,
    pub gen_matrices: Vec<Mat2>,
    pub relators: Vec<Word>,
    /// Sign of each relator evaluation in SL2; identity-verified on load, so
    /// always +1 for shipped data.
    pub relator_signs: Vec<i8>,
    /// Which data file this came from.
    pub provenance: String,
    /// (free rank, divisors) of H_1(SL2(O_D); Z) recorded in the data file.
    pub abelianization_fixture: Option<(usize, Vec<u64>)>,
}

const DATA_D1: &str = include_str!("../data/presentation_D1.txt");
const DATA_D2: &str = include_str!("../data/presentation_D2.txt");
const DATA_D3: &str = include_str!("../data/presentation_D3.txt");
const DATA_D7: &str = include_str!("../data/presentation_D7.txt");
const DATA_D11: &str = include_str!("../data/presentation_D11.txt");

pub const SHIPPED_D: [u64; 5] = [1, 2, 3, 7, 11];

/// Loads and validates the shipped presentation of SL2(O_D).
pub fn load_presentation(d: u64) -> Result<GroupPresentation> {
    let (text, name) = match d {
        1 => (DATA_D1, "presentation_D1.txt"),
        2 => (DATA_D2, "presentation_D2.txt"),
        3 => (DATA_D3, "presentation_D3.txt"),
        7 => (DATA_D7, "presentation_D7.txt"),
        11 => (DATA_D11, "presentation_D11.txt"),
        _ => return Err(Error::MissingPresentation(d)),
    };
    let field = FieldDescriptor::new(d)?;
    let pres = parse_presentation(text, &field, name)?;
    validate_presentation(&pres)?;
    Ok(pres)
}

pub fn parse_presentation(
    text: &str,
    field: &FieldDescriptor,
    provenance: &str,
) -> Result<GroupPresentation> {
    #[derive(PartialEq)]
    enum Section {
        Preamble,
        Generators,
        Relators,
    }
    let mut section = Section::Preamble;
    let mut gen_matrices = Vec::new();
    let mut relators = Vec::new();
    let mut fixture = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(spec) = rest.strip_prefix("abelianization:") {
                fixture = Some(parse_fixture(spec)?);
            }
            continue;
        }
        match line {
            "generators" => section = Section::Generators,
            "relators" => section = Section::Relators,
            _ => match section {
                Section::Generators => gen_matrices.push(parse_mat2(line)?),
                Section::Relators => relators.push(parse_relator(line, gen_matrices.len())?),
                Section::Preamble => {
                    return Err(Error::Parse(format!("unexpected line before sections: {line}")))
                }
            },
        }
    }
    let gen_names: Vec<String> = (1..=gen_matrices.len()).map(|i| format!("g{i}")).collect();
    let relator_signs = vec![1i8; relators.len()];
    Ok(GroupPresentation {
        field: field.clone(),
        gen_names,
        gen_matrices,
        relators,
        relator_signs,
        provenance: provenance.to_string(),
        abelianization_fixture: fixture,
    })
}

fn parse_fixture(spec: &str) -> Result<(usize, Vec<u64>)> {
    let mut rank = None;
    let mut divisors = Vec::new();
    for tok in spec.split_whitespace() {
        if let Some(r) = tok.strip_prefix("rank=") {
            rank = Some(r.parse::<usize>().map_err(|_| Error::Parse(format!("bad rank {r}")))?);
        } else if let Some(dlist) = tok.strip_prefix("divisors=") {
            if !dlist.is_empty() {
                for d in dlist.split(',') {
                    divisors
                        .push(d.parse::<u64>().map_err(|_| Error::Parse(format!("bad divisor {d}")))?);
                }
            }
        }
    }
    Ok((rank.ok_or_else(|| Error::Parse("fixture missing rank".into()))?, divisors))
}

fn parse_relator(line: &str, gen_count: usize) -> Result<Word> {
    let mut word = Vec::new();
    for tok in line.split_whitespace() {
        let (name, inv) = match tok.strip_suffix("^-1") {
            Some(n) => (n, true),
            None => (tok, false),
        };
        let idx: u32 = name
            .strip_prefix('g')
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad generator token {tok}")))?;
        if idx == 0 || idx as usize > gen_count {
            return Err(Error::Parse(format!("generator {tok} out of range")));
        }
        word.push(if inv { -(idx as i32) } else { idx as i32 });
    }
    Ok(word)
}

/// Every relator must evaluate to the exact identity.
pub fn validate_presentation(pres: &GroupPresentation) -> Result<()> {
    for (i, r) in pres.relators.iter().enumerate() {
        let m = evaluate(r, &pres.gen_matrices, &pres.field);
        if !m.is_identity() {
            return Err(Error::RelatorEvaluation {
                index: i,
                word: format_word(r, &pres.gen_names),
            });
        }
    }
    Ok(())
}

/// Abelianization from exponent sums: free rank and nontrivial divisors of
/// Z^g modulo the relator columns.
pub fn abelianization(gens: usize, relators: &[Word]) -> (usize, Vec<BigInt>) {
    let mut m = SparseIntMatrix::zero(gens, 0);
    for r in relators {
        let mut col = vec![0i64; gens];
        for &l in r {
            let idx = (l.unsigned_abs() - 1) as usize;
            col[idx] += l.signum() as i64;
        }
        let sparse: Vec<(u32, BigInt)> = col
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0)
            .map(|(i, v)| (i as u32, BigInt::from(*v)))
            .collect();
        m.push_column(sparse);
    }
    let snf = smith_normal_form(&m);
    (gens - snf.rank, snf.torsion_divisors())
}

/// Checks the in-file abelianization fixture.
pub fn check_abelianization_fixture(pres: &GroupPresentation) -> Result<()> {
    let Some((rank, divisors)) = &pres.abelianization_fixture else {
        return Ok(());
    };
    let (got_rank, got_div) = abelianization(pres.gen_matrices.len(), &pres.relators);
    let got_div: Vec<u64> = got_div.iter().map(|d| d.to_u64().unwrap()).collect();
    if got_rank != *rank || got_div != *divisors {
        return Err(Error::Parse(format!(
            "abelianization fixture mismatch for {}: got rank {got_rank} divisors {got_div:?}, fixture rank {rank} divisors {divisors:?}",
            pres.provenance
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_presentations_validate() {
        for d in SHIPPED_D {
            let pres = load_presentation(d).unwrap();
            assert!(!pres.relators.is_empty());
            // Generators must have determinant one.
            for g in &pres.gen_matrices {
                assert!(g.det(&pres.field).is_one(), "D={d}");
            }
        }
    }

    #[test]
    fn abelianization_fixtures_hold() {
        // The fixtures were computed by hand-reducing the exponent matrices.
        for d in SHIPPED_D {
            let pres = load_presentation(d).unwrap();
            assert!(pres.abelianization_fixture.is_some(), "D={d} must carry a fixture");
            check_abelianization_fixture(&pres).unwrap_or_else(|e| panic!("D={d}: {e}"));
        }
    }

    #[test]
    fn unknown_d_is_rejected() {
        assert!(matches!(load_presentation(6), Err(Error::MissingPresentation(6))));
    }

    #[test]
    fn corrupted_relator_is_caught() {
        let field = FieldDescriptor::new(1).unwrap();
        let text = "generators\n0,-1;1,0\nrelators\ng1 g1\n";
        let pres = parse_presentation(text, &field, "test").unwrap();
        assert!(matches!(
            validate_presentation(&pres),
            Err(Error::RelatorEvaluation { index: 0, .. })
        ));
    }
}
