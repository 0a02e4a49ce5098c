use crate::sim::EventImportance;
use crate::{Error, Result};

/// Binary indicator vector of `value` over `categories`.
pub fn one_hot_encode<S: AsRef<str>>(value: &str, categories: &[S]) -> Result<Vec<f64>> {
    let pos = categories
        .iter()
        .position(|c| c.as_ref() == value)
        .ok_or_else(|| Error::UnknownCategory {
            field: "one-hot",
            value: value.to_string(),
        })?;
    let mut v = vec![0.0; categories.len()];
    v[pos] = 1.0;
    Ok(v)
}

/// Event importance as an ordinal level. Low-importance events rank with
/// ordinary days.
pub fn ordinal_encode_event(importance: EventImportance) -> u8 {
    match importance {
        EventImportance::High => 2,
        EventImportance::Medium => 1,
        EventImportance::Low | EventImportance::None => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SKY: [&str; 3] = ["Sunny", "Rainy", "Cloudy"];

    #[test]
    fn one_hot_examples() {
        assert_eq!(one_hot_encode("Rainy", &SKY).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(one_hot_encode("x", &["x"]).unwrap(), vec![1.0]);
        assert!(matches!(
            one_hot_encode("Snowy", &SKY),
            Err(Error::UnknownCategory { .. })
        ));
    }

    #[test]
    fn ordinal_examples() {
        assert_eq!(ordinal_encode_event(EventImportance::High), 2);
        assert_eq!(ordinal_encode_event(EventImportance::Medium), 1);
        assert_eq!(ordinal_encode_event(EventImportance::Low), 0);
        assert_eq!(ordinal_encode_event(EventImportance::None), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn one_hot_sums_to_one_and_round_trips(k in 0usize..3) {
            let v = one_hot_encode(SKY[k], &SKY).unwrap();
            prop_assert_eq!(v.iter().sum::<f64>(), 1.0);
            let argmax = v.iter().position(|x| *x == 1.0).unwrap();
            prop_assert_eq!(SKY[argmax], SKY[k]);
        }
    }
}
