//! Restricted Damerau–Levenshtein (optimal string alignment) matching.
//!
//! [`osa_distance`] is the plain full-matrix computation. [`fuzzy_terms`]
//! walks a sorted term dictionary and shares DP rows between consecutive
//! terms with a common prefix, skipping every term below a prefix whose rows
//! already exceed the distance budget.

use std::collections::BTreeMap;
use std::ops::Bound;

/// Edit budget for a query term of `chars` characters.
pub fn max_distance(chars: usize) -> usize {
    match chars {
        0..=2 => 0,
        3..=4 => 1,
        _ => 2,
    }
}

pub fn osa_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut v = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                v = v.min(d[i - 2][j - 2] + 1);
            }
            d[i][j] = v;
        }
    }
    d[n][m]
}

/// All dictionary terms within `max_d` edits of `query`, in dictionary order,
/// with their distances. The query itself is included when present.
pub fn fuzzy_terms<'a, V>(dict: &'a BTreeMap<String, V>, query: &str, max_d: usize) -> Vec<(&'a str, usize)> {
    let q: Vec<char> = query.chars().collect();
    let m = q.len();
    let mut out = Vec::new();
    // rows[j] is the DP row after consuming j characters of `cur`.
    let mut rows: Vec<Vec<usize>> = vec![(0..=m).collect()];
    let mut cur: Vec<char> = Vec::new();
    let mut lower: Bound<String> = Bound::Unbounded;

    loop {
        let next = dict
            .range::<str, _>((lower.as_ref().map(String::as_str), Bound::Unbounded))
            .next();
        let Some((term, _)) = next else { break };
        let t: Vec<char> = term.chars().collect();
        let lcp = cur.iter().zip(&t).take_while(|(a, b)| a == b).count();
        cur.truncate(lcp);
        rows.truncate(lcp + 1);

        let mut pruned_at = None;
        for j in lcp..t.len() {
            let prev = &rows[j];
            let mut row = Vec::with_capacity(m + 1);
            row.push(j + 1);
            for i in 1..=m {
                let cost = usize::from(q[i - 1] != t[j]);
                let mut v = (prev[i] + 1).min(row[i - 1] + 1).min(prev[i - 1] + cost);
                if i > 1 && j > 0 && q[i - 1] == t[j - 1] && q[i - 2] == t[j] {
                    v = v.min(rows[j - 1][i - 2] + 1);
                }
                row.push(v);
            }
            let row_min = *row.iter().min().expect("row has m + 1 cells");
            let prev_min = *prev.iter().min().expect("row has m + 1 cells");
            rows.push(row);
            cur.push(t[j]);
            // Later rows can only drop below the budget through this row or,
            // via a transposition, through the previous one.
            if row_min > max_d && prev_min >= max_d {
                pruned_at = Some(j + 1);
                break;
            }
        }

        match pruned_at {
            Some(p) => {
                let mut skip: String = t[..p].iter().collect();
                skip.push(char::MAX);
                lower = Bound::Excluded(skip);
            }
            None => {
                let d = rows[t.len()][m];
                if d <= max_d {
                    out.push((term.as_str(), d));
                }
                lower = Bound::Excluded(term.clone());
            }
        }
    }
    out
}

/// Dictionary terms that strictly extend `prefix`.
pub fn prefix_terms<'a, V>(dict: &'a BTreeMap<String, V>, prefix: &str) -> impl Iterator<Item = &'a str> + 'a {
    let owned = prefix.to_string();
    dict.range::<str, _>((Bound::Excluded(prefix), Bound::Unbounded))
        .map(|(k, _)| k.as_str())
        .take_while(move |k| k.starts_with(owned.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dict(words: &[&str]) -> BTreeMap<String, ()> {
        words.iter().map(|w| (w.to_string(), ())).collect()
    }

    #[test]
    fn distance_basics() {
        assert_eq!(osa_distance("wimdley", "windley"), 1);
        assert_eq!(osa_distance("windley", "windley"), 0);
        assert_eq!(osa_distance("ca", "ac"), 1);
        assert_eq!(osa_distance("ca", "abc"), 3);
        assert_eq!(osa_distance("", "abc"), 3);
        assert_eq!(osa_distance("kitten", "sitting"), 3);
    }

    #[test]
    fn budget_by_length() {
        assert_eq!(max_distance(2), 0);
        assert_eq!(max_distance(3), 1);
        assert_eq!(max_distance(4), 1);
        assert_eq!(max_distance(5), 2);
        assert_eq!(max_distance(30), 2);
    }

    #[test]
    fn finds_single_typo() {
        let d = dict(&["phil", "windley", "wind", "windy", "credit", "window"]);
        assert_eq!(fuzzy_terms(&d, "wimdley", 2), vec![("windley", 1)]);
    }

    #[test]
    fn prefix_walk() {
        let d = dict(&["employ", "employee", "employment", "emu", "empty"]);
        let p: Vec<_> = prefix_terms(&d, "employ").collect();
        assert_eq!(p, vec!["employee", "employment"]);
        assert_eq!(prefix_terms(&d, "zz").count(), 0);
    }

    proptest! {
        #[test]
        fn walk_agrees_with_full_matrix(
            words in proptest::collection::vec("[a-e]{0,7}", 0..60),
            query in "[a-e]{0,7}",
            max_d in 0usize..3,
        ) {
            let d: BTreeMap<String, ()> = words.iter().map(|w| (w.clone(), ())).collect();
            let walked = fuzzy_terms(&d, &query, max_d);
            let expected: Vec<(&str, usize)> = d
                .keys()
                .map(|k| (k.as_str(), osa_distance(k, &query)))
                .filter(|(_, dist)| *dist <= max_d)
                .collect();
            prop_assert_eq!(walked, expected);
        }

        #[test]
        fn distance_is_symmetric(a in "[a-d]{0,6}", b in "[a-d]{0,6}") {
            prop_assert_eq!(osa_distance(&a, &b), osa_distance(&b, &a));
        }
    }
}
