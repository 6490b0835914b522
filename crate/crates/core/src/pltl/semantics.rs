//! Reference finite-trace semantics.
//!
//! `eval_at` follows the inductive definition literally (quantifiers over
//! earlier positions), so it is quadratic per position. It is the oracle the
//! incremental [`Monitor`](super::Monitor) is checked against; production
//! callers should go through [`holds_globally`] and [`earliest_violation`],
//! which run the monitor.

use super::{Formula, Monitor, PltlError, Trace};

/// Truth of `f` at position `i` of `t`.
pub fn eval_at(f: &Formula, t: &Trace, i: usize) -> Result<bool, PltlError> {
    if i >= t.len() {
        return Err(PltlError::IndexOutOfRange { index: i, len: t.len() });
    }
    check_width(f, t)?;
    Ok(eval(f, t, i))
}

fn check_width(f: &Formula, t: &Trace) -> Result<(), PltlError> {
    match f.max_prop() {
        Some(p) if p.0 >= t.width() => Err(PltlError::AlphabetMismatch {
            expected: p.0 + 1,
            found: t.width(),
        }),
        _ => Ok(()),
    }
}

fn eval(f: &Formula, t: &Trace, i: usize) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Prop(p) => t.state(i).get(*p),
        Formula::Not(a) => !eval(a, t, i),
        Formula::And(a, b) => eval(a, t, i) && eval(b, t, i),
        Formula::Or(a, b) => eval(a, t, i) || eval(b, t, i),
        Formula::Yesterday(a) => i > 0 && eval(a, t, i - 1),
        Formula::Once(a) => (0..=i).any(|j| eval(a, t, j)),
        Formula::Historically(a) => (0..=i).all(|j| eval(a, t, j)),
        Formula::Since(a, b) => {
            (0..=i).any(|j| eval(b, t, j) && (j + 1..=i).all(|k| eval(a, t, k)))
        }
    }
}

/// True iff `f` holds at every position of `t` (vacuously true when empty).
pub fn holds_globally(f: &Formula, t: &Trace) -> Result<bool, PltlError> {
    Ok(earliest_violation(f, t)?.is_none())
}

/// First position where `f` is false.
pub fn earliest_violation(f: &Formula, t: &Trace) -> Result<Option<usize>, PltlError> {
    check_width(f, t)?;
    let mut monitor = Monitor::new(f, t.width());
    for (i, s) in t.states().iter().enumerate() {
        if !monitor.step(s)? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Truth of `f` at the last position only. Empty traces count as satisfied.
pub fn holds_at_end(f: &Formula, t: &Trace) -> Result<bool, PltlError> {
    check_width(f, t)?;
    let mut monitor = Monitor::new(f, t.width());
    let mut last = true;
    for s in t.states() {
        last = monitor.step(s)?;
    }
    Ok(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pltl::{Alphabet, PropId};

    fn p(i: usize) -> Formula {
        Formula::Prop(PropId(i))
    }

    #[test]
    fn constants_and_yesterday_base_case() {
        let t = Trace::from_rows(1, &[&[true], &[false]]).unwrap();
        assert!(eval_at(&Formula::True, &t, 1).unwrap());
        assert!(!eval_at(&Formula::False, &t, 0).unwrap());
        assert!(!eval_at(&Formula::yesterday(Formula::True), &t, 0).unwrap());
        assert!(eval_at(&Formula::yesterday(p(0)), &t, 1).unwrap());
    }

    #[test]
    fn since_hand_example() {
        // b at j=0, ¬a at k=1
        let t = Trace::from_rows(2, &[&[false, true], &[false, false]]).unwrap();
        let f = Formula::since(Formula::not(p(0)), p(1));
        assert!(eval_at(&f, &t, 1).unwrap());
        let t2 = Trace::from_rows(2, &[&[false, true], &[true, false]]).unwrap();
        assert!(!eval_at(&f, &t2, 1).unwrap());
    }

    #[test]
    fn index_out_of_range() {
        let t = Trace::from_rows(1, &[&[true]]).unwrap();
        assert!(matches!(
            eval_at(&p(0), &t, 1),
            Err(PltlError::IndexOutOfRange { index: 1, len: 1 })
        ));
    }

    #[test]
    fn global_holds_and_earliest() {
        let t = Trace::from_rows(1, &[&[true], &[false], &[false]]).unwrap();
        assert!(!holds_globally(&p(0), &t).unwrap());
        assert_eq!(earliest_violation(&p(0), &t).unwrap(), Some(1));
        assert_eq!(earliest_violation(&Formula::True, &t).unwrap(), None);
        let empty = Trace::new(1);
        assert!(holds_globally(&p(0), &empty).unwrap());
        assert_eq!(earliest_violation(&Formula::False, &empty).unwrap(), None);
    }

    #[test]
    fn width_mismatch_is_reported() {
        let t = Trace::from_rows(1, &[&[true]]).unwrap();
        assert!(matches!(
            holds_globally(&p(3), &t),
            Err(PltlError::AlphabetMismatch { .. })
        ));
        let _ = Alphabet::default();
    }
}
