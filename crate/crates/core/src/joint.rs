//! Joint model: the plain average of global and context model scores.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scores::TypeScoreMatrix;
use crate::tensor::Matrix;

pub fn joint_predict(gm: &TypeScoreMatrix, cm: &TypeScoreMatrix) -> Result<TypeScoreMatrix> {
    if gm.num_entities() != cm.num_entities() {
        return Err(Error::Alignment(format!(
            "{} entities vs {}",
            gm.num_entities(),
            cm.num_entities()
        )));
    }
    if let Some((i, (a, b))) = gm.entities().iter().zip(cm.entities()).enumerate().find(|(_, (a, b))| a != b) {
        return Err(Error::Alignment(format!("row {i}: entity `{a}` vs `{b}`")));
    }
    if gm.num_types() != cm.num_types() {
        return Err(Error::Alignment(format!("{} types vs {}", gm.num_types(), cm.num_types())));
    }
    if let Some((j, (a, b))) = gm.types().iter().zip(cm.types()).enumerate().find(|(_, (a, b))| a != b) {
        return Err(Error::Alignment(format!("column {j}: type `{a}` vs `{b}`")));
    }
    let data: Vec<f64> = gm
        .scores()
        .as_slice()
        .iter()
        .zip(cm.scores().as_slice())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    TypeScoreMatrix::new(
        gm.entities().to_vec(),
        gm.types().to_vec(),
        Matrix::from_vec(gm.num_entities(), gm.num_types(), data)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;
    use alloc::vec;
    use proptest::prelude::*;

    fn m(ents: &[&str], types: &[&str], rows: Vec<Vec<f64>>) -> TypeScoreMatrix {
        TypeScoreMatrix::from_rows(
            ents.iter().map(|s| String::from(*s)).collect(),
            types.iter().map(|s| String::from(*s)).collect(),
            rows,
        )
        .unwrap()
    }

    #[test]
    fn idempotent_and_halfway() {
        let a = m(&["e1", "e2"], &["t"], vec![vec![0.3], vec![0.9]]);
        assert_eq!(joint_predict(&a, &a).unwrap(), a);
        let one = m(&["e"], &["t"], vec![vec![1.0]]);
        let zero = m(&["e"], &["t"], vec![vec![0.0]]);
        assert_eq!(joint_predict(&one, &zero).unwrap().get(0, 0), 0.5);
    }

    #[test]
    fn misalignment_names_first_offender() {
        let a = m(&["e1", "e2"], &["t"], vec![vec![0.1], vec![0.2]]);
        let b = m(&["e1", "e3"], &["t"], vec![vec![0.1], vec![0.2]]);
        let err = joint_predict(&a, &b).unwrap_err();
        assert!(matches!(&err, Error::Alignment(msg) if msg.contains("e3")));
        let c = m(&["e1", "e2"], &["u"], vec![vec![0.1], vec![0.2]]);
        assert!(joint_predict(&a, &c).is_err());
    }

    proptest! {
        #[test]
        fn brute_force_mean_and_commutative(vals in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..40)) {
            let n = vals.len();
            let ents: Vec<String> = (0..n).map(|i| alloc::format!("e{i}")).collect();
            let types = vec![String::from("t")];
            let a = TypeScoreMatrix::from_rows(ents.clone(), types.clone(), vals.iter().map(|v| vec![v.0]).collect()).unwrap();
            let b = TypeScoreMatrix::from_rows(ents, types, vals.iter().map(|v| vec![v.1]).collect()).unwrap();
            let ab = joint_predict(&a, &b).unwrap();
            prop_assert_eq!(&ab, &joint_predict(&b, &a).unwrap());
            for (i, v) in vals.iter().enumerate() {
                prop_assert!((ab.get(i, 0) - (v.0 + v.1) / 2.0).abs() < 1e-15);
                prop_assert!((0.0..=1.0).contains(&ab.get(i, 0)));
            }
        }
    }
}
