//! Loaders for MovieLens 100K and Jester, the holdout split and the
//! `observations.csv` exchange format.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observations::{BinaryObservationMatrix, Entry};
use crate::synth::sample_omega;

pub const JESTER_MISSING: f64 = 99.0;
pub const MOVIELENS_MIN_RATINGS: usize = 5;

#[derive(Clone, Debug)]
pub struct MovieLensData {
    /// Rows are movies, columns are users.
    pub y: BinaryObservationMatrix,
    /// Original item id of each row.
    pub movie_ids: Vec<u64>,
    /// Original user id of each column.
    pub user_ids: Vec<u64>,
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

fn parse_id(field: Option<&str>, line: usize, what: &str) -> Result<u64> {
    let raw = field.ok_or_else(|| format_err(line, format!("missing {what}")))?;
    let id: u64 = raw
        .trim()
        .parse()
        .map_err(|_| format_err(line, format!("bad {what} {raw:?}")))?;
    if id == 0 {
        return Err(format_err(line, format!("{what} must be positive")));
    }
    Ok(id)
}

/// Reads the tab-separated `u.data` layout. Ratings 4–5 map to 1, 1–3 to 0;
/// movies with fewer than five ratings are dropped. A repeated
/// `(movie, user)` pair keeps the last rating.
pub fn load_movielens<R: BufRead>(reader: R) -> Result<MovieLensData> {
    let mut ratings: HashMap<(u64, u64), u8> = HashMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let user = parse_id(fields.next(), lineno, "user id")?;
        let item = parse_id(fields.next(), lineno, "item id")?;
        let raw = fields
            .next()
            .ok_or_else(|| format_err(lineno, "missing rating"))?
            .trim();
        let rating: u8 = raw
            .parse()
            .map_err(|_| format_err(lineno, format!("rating {raw:?} is not an integer")))?;
        if !(1..=5).contains(&rating) {
            return Err(format_err(lineno, format!("rating {rating} outside 1-5")));
        }
        ratings.insert((item, user), u8::from(rating >= 4));
    }
    if ratings.is_empty() {
        return Err(Error::EmptyData);
    }

    let mut per_movie: BTreeMap<u64, usize> = BTreeMap::new();
    for &(item, _) in ratings.keys() {
        *per_movie.entry(item).or_default() += 1;
    }
    let movie_ids: Vec<u64> = per_movie
        .into_iter()
        .filter(|&(_, c)| c >= MOVIELENS_MIN_RATINGS)
        .map(|(m, _)| m)
        .collect();
    if movie_ids.is_empty() {
        return Err(Error::EmptyData);
    }
    let row_of: HashMap<u64, usize> = movie_ids.iter().enumerate().map(|(r, &m)| (m, r)).collect();
    let mut user_ids: Vec<u64> = ratings
        .keys()
        .filter(|(m, _)| row_of.contains_key(m))
        .map(|&(_, u)| u)
        .collect();
    user_ids.sort_unstable();
    user_ids.dedup();
    let col_of: HashMap<u64, usize> = user_ids.iter().enumerate().map(|(c, &u)| (u, c)).collect();

    let entries: Vec<Entry> = ratings
        .iter()
        .filter_map(|(&(m, u), &y)| {
            row_of.get(&m).map(|&i| Entry {
                i,
                j: col_of[&u],
                y,
            })
        })
        .collect();
    let y = BinaryObservationMatrix::new(movie_ids.len(), user_ids.len(), entries)?;
    Ok(MovieLensData {
        y,
        movie_ids,
        user_ids,
    })
}

/// Reads the comma-separated Jester layout: a leading per-user count
/// followed by one column per joke, `99` marking a missing rating.
/// Non-negative ratings map to 1.
pub fn load_jester<R: BufRead>(reader: R) -> Result<BinaryObservationMatrix> {
    let mut entries = Vec::new();
    let mut q: Option<usize> = None;
    let mut p = 0usize;
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(format_err(lineno, "expected a count and at least one rating"));
        }
        let width = fields.len() - 1;
        match q {
            None => q = Some(width),
            Some(w) if w != width => {
                return Err(format_err(
                    lineno,
                    format!("row has {width} ratings, expected {w}"),
                ))
            }
            _ => {}
        }
        for (j, raw) in fields[1..].iter().enumerate() {
            let raw = raw.trim();
            let v: f64 = raw
                .parse()
                .map_err(|_| format_err(lineno, format!("bad rating {raw:?}")))?;
            if v == JESTER_MISSING {
                continue;
            }
            if !(-10.0..=10.0).contains(&v) {
                return Err(format_err(
                    lineno,
                    format!("rating {v} outside [-10, 10] and not the missing marker"),
                ));
            }
            entries.push(Entry {
                i: p,
                j,
                y: u8::from(v >= 0.0),
            });
        }
        p += 1;
    }
    let q = q.ok_or(Error::EmptyData)?;
    if entries.is_empty() {
        return Err(Error::EmptyData);
    }
    BinaryObservationMatrix::new(p, q, entries)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutSplit {
    pub train_omega: Vec<(usize, usize)>,
    pub test_omega: Vec<(usize, usize)>,
    pub test_outcomes: Vec<u8>,
}

/// Masks a uniform subset of `round(test_fraction * |Omega|)` observed
/// cells. Returns the training matrix and the split.
pub fn holdout_split(
    y: &BinaryObservationMatrix,
    test_fraction: f64,
    seed: u64,
) -> Result<(BinaryObservationMatrix, HoldoutSplit)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "test_fraction = {test_fraction} must lie in (0, 1)"
        )));
    }
    let n = y.n_observed();
    let n_test = (test_fraction * n as f64).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::Argument(format!(
            "test_fraction = {test_fraction} leaves an empty side on {n} observations"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; n];
    for (_, k) in sample_omega(1, n, n_test, &mut rng)? {
        is_test[k] = true;
    }
    let mut train = Vec::with_capacity(n - n_test);
    let mut split = HoldoutSplit {
        train_omega: Vec::with_capacity(n - n_test),
        test_omega: Vec::with_capacity(n_test),
        test_outcomes: Vec::with_capacity(n_test),
    };
    for (e, &t) in y.entries().iter().zip(&is_test) {
        if t {
            split.test_omega.push((e.i, e.j));
            split.test_outcomes.push(e.y);
        } else {
            split.train_omega.push((e.i, e.j));
            train.push(*e);
        }
    }
    Ok((y.with_entries(train)?, split))
}

/// Reads `i,j,y` with a header line. Without `shape`, the dimensions are
/// the maximum indices plus one.
pub fn read_observations_csv<R: BufRead>(
    reader: R,
    shape: Option<(usize, usize)>,
) -> Result<BinaryObservationMatrix> {
    let mut entries = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        let t = line.trim();
        if t.is_empty() || (n == 0 && t.starts_with(|c: char| c.is_ascii_alphabetic())) {
            continue;
        }
        let f: Vec<&str> = t.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(format_err(lineno, format!("expected 3 fields, found {}", f.len())));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| format_err(lineno, format!("bad integer {s:?}")))
        };
        let (i, j, y) = (parse(f[0])?, parse(f[1])?, parse(f[2])?);
        if y > 1 {
            return Err(format_err(lineno, format!("outcome {y} is not binary")));
        }
        entries.push(Entry { i, j, y: y as u8 });
    }
    let (p, q) = match shape {
        Some(s) => s,
        None => {
            if entries.is_empty() {
                return Err(Error::EmptyData);
            }
            (
                entries.iter().map(|e| e.i).max().unwrap() + 1,
                entries.iter().map(|e| e.j).max().unwrap() + 1,
            )
        }
    };
    BinaryObservationMatrix::new(p, q, entries)
}

pub fn write_observations_csv<W: Write>(writer: W, y: &BinaryObservationMatrix) -> Result<()> {
    let mut w = std::io::BufWriter::new(writer);
    writeln!(w, "i,j,y")?;
    for e in y.entries() {
        writeln!(w, "{},{},{}", e.i, e.j, e.y)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a list of cells, `i,j` per line, with an optional header and an
/// optional third column that is ignored.
pub fn read_cells_csv<R: BufRead>(reader: R) -> Result<Vec<(usize, usize)>> {
    let mut cells = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || (n == 0 && t.starts_with(|c: char| c.is_ascii_alphabetic())) {
            continue;
        }
        let f: Vec<&str> = t.split(',').map(str::trim).collect();
        if f.len() < 2 {
            return Err(format_err(n + 1, "expected i,j"));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| format_err(n + 1, format!("bad integer {s:?}")))
        };
        cells.push((parse(f[0])?, parse(f[1])?));
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn ml_lines(records: &[(u64, u64, u8)]) -> String {
        records
            .iter()
            .map(|(u, i, r)| format!("{u}\t{i}\t{r}\t881250949\n"))
            .collect()
    }

    #[test]
    fn movielens_binarizes_and_filters() {
        let mut recs = Vec::new();
        for u in 1..=5 {
            recs.push((u, 10, if u == 1 { 3 } else { 4 }));
        }
        for u in 1..=4 {
            recs.push((u, 20, 5));
        }
        let data = load_movielens(Cursor::new(ml_lines(&recs))).unwrap();
        assert_eq!(data.movie_ids, vec![10]);
        assert_eq!(data.y.shape(), (1, 5));
        assert_eq!(data.y.get(0, 0), Some(0));
        assert_eq!(data.y.get(0, 1), Some(1));
    }

    #[test]
    fn movielens_duplicate_keeps_last() {
        let mut recs: Vec<_> = (1..=5).map(|u| (u, 7, 5)).collect();
        recs.push((3, 7, 1));
        let data = load_movielens(Cursor::new(ml_lines(&recs))).unwrap();
        assert_eq!(data.y.n_observed(), 5);
        assert_eq!(data.y.get(0, 2), Some(0));
    }

    #[test]
    fn movielens_errors() {
        let err = load_movielens(Cursor::new("1\t2\t3\t0\n1\t3\t6\t0\n")).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }));
        assert!(matches!(load_movielens(Cursor::new("")), Err(Error::EmptyData)));
    }

    #[test]
    fn jester_sign_rule_and_sentinel() {
        let y = load_jester(Cursor::new("3,0.00,-0.01,99,7.5\n1,99,99,99,-10\n")).unwrap();
        assert_eq!(y.shape(), (2, 4));
        assert_eq!(y.n_observed(), 4);
        assert_eq!(y.get(0, 0), Some(1));
        assert_eq!(y.get(0, 1), Some(0));
        assert_eq!(y.get(0, 2), None);
        assert_eq!(y.get(1, 3), Some(0));
        assert!(matches!(
            load_jester(Cursor::new("1,10.5\n")),
            Err(Error::Format { line: 1, .. })
        ));
    }

    #[test]
    fn holdout_partition() {
        let entries: Vec<Entry> = (0..100)
            .map(|k| Entry {
                i: k / 10,
                j: k % 10,
                y: (k % 3 == 0) as u8,
            })
            .collect();
        let y = BinaryObservationMatrix::new(10, 10, entries).unwrap();
        let (train, split) = holdout_split(&y, 0.5, 4).unwrap();
        assert_eq!(split.test_omega.len(), 50);
        assert_eq!(train.n_observed(), 50);
        for &(i, j) in &split.test_omega {
            assert!(!train.is_observed(i, j));
        }
        let (_, again) = holdout_split(&y, 0.5, 4).unwrap();
        assert_eq!(split, again);
        assert!(holdout_split(&y, 1.0, 4).is_err());
        assert!(holdout_split(&y, 0.0, 4).is_err());
    }

    #[test]
    fn observations_csv_roundtrip() {
        let y = BinaryObservationMatrix::from_triplets(3, 2, &[(0, 1, 1), (2, 0, 0)]).unwrap();
        let mut buf = Vec::new();
        write_observations_csv(&mut buf, &y).unwrap();
        let back = read_observations_csv(Cursor::new(buf), Some((3, 2))).unwrap();
        assert_eq!(back, y);
    }
}
