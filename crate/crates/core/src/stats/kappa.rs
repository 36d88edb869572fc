use serde::{Deserialize, Serialize};

use super::{Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    /// Categories 1..=5 stored as indices 0..=4.
    Likert5,
    /// `N` = 0, `Y` = 1.
    Binary,
}

impl Scale {
    pub fn categories(&self) -> usize {
        match self {
            Scale::Likert5 => 5,
            Scale::Binary => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    None,
    Quadratic,
}

/// Items x raters table of category indices; `None` marks an absent rating.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingMatrix {
    pub scale: Scale,
    pub items: Vec<String>,
    pub raters: Vec<String>,
    pub cells: Vec<Vec<Option<u8>>>,
}

impl RatingMatrix {
    pub fn new(scale: Scale, items: Vec<String>, raters: Vec<String>, cells: Vec<Vec<Option<u8>>>) -> Result<Self> {
        if cells.len() != items.len() {
            return Err(StatsError::LengthMismatch(cells.len(), items.len()));
        }
        let k = scale.categories() as u8;
        for row in &cells {
            if row.len() != raters.len() {
                return Err(StatsError::LengthMismatch(row.len(), raters.len()));
            }
            if let Some(bad) = row.iter().flatten().find(|&&c| c >= k) {
                return Err(StatsError::InvalidArgument(format!(
                    "category index {bad} outside scale of {k}"
                )));
            }
        }
        Ok(Self {
            scale,
            items,
            raters,
            cells,
        })
    }

    /// Build from complete rows of category indices, naming items and raters
    /// by position.
    pub fn from_complete(scale: Scale, rows: &[Vec<u8>]) -> Result<Self> {
        let raters = rows.first().map_or(0, Vec::len);
        Self::new(
            scale,
            (0..rows.len()).map(|i| format!("item{i}")).collect(),
            (0..raters).map(|r| format!("rater{r}")).collect(),
            rows.iter().map(|r| r.iter().copied().map(Some).collect()).collect(),
        )
    }

    pub fn column(&self, rater: usize) -> Vec<Option<u8>> {
        self.cells.iter().map(|row| row[rater]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FleissResult {
    pub kappa: f64,
    pub p_bar: f64,
    pub p_e: f64,
    pub items_used: usize,
    pub items_dropped: usize,
}

/// `(P_bar - P_e) / (1 - P_e)`.
pub fn fleiss_kappa_from_aggregates(p_bar: f64, p_e: f64) -> Result<f64> {
    if (1.0 - p_e).abs() < 1e-15 {
        return Err(StatsError::DegenerateAgreementBase);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Fleiss' kappa over fully rated items; incomplete items are dropped and
/// counted.
pub fn fleiss_kappa(m: &RatingMatrix) -> Result<FleissResult> {
    let r = m.raters.len();
    if r < 2 {
        return Err(StatsError::InsufficientData("fleiss kappa needs two raters".into()));
    }
    let k = m.scale.categories();
    let complete: Vec<&Vec<Option<u8>>> = m.cells.iter().filter(|row| row.iter().all(Option::is_some)).collect();
    let dropped = m.cells.len() - complete.len();
    if complete.is_empty() {
        return Err(StatsError::InsufficientData("no fully rated item".into()));
    }
    let n_items = complete.len() as f64;
    let rf = r as f64;
    let mut totals = vec![0.0; k];
    let mut p_sum = 0.0;
    for row in &complete {
        let mut counts = vec![0.0; k];
        for c in row.iter().flatten() {
            counts[*c as usize] += 1.0;
        }
        for (t, c) in totals.iter_mut().zip(&counts) {
            *t += c;
        }
        p_sum += (counts.iter().map(|c| c * c).sum::<f64>() - rf) / (rf * (rf - 1.0));
    }
    let p_bar = p_sum / n_items;
    let p_e: f64 = totals.iter().map(|t| (t / (n_items * rf)).powi(2)).sum();
    Ok(FleissResult {
        kappa: fleiss_kappa_from_aggregates(p_bar, p_e)?,
        p_bar,
        p_e,
        items_used: complete.len(),
        items_dropped: dropped,
    })
}

/// Cohen's kappa for two raters over `categories` classes; quadratic weights
/// `1 - (i - j)^2 / (k - 1)^2` for the ordinal form.
pub fn cohens_kappa(a: &[u8], b: &[u8], categories: usize, weighting: Weighting) -> Result<f64> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(StatsError::InsufficientData("no paired ratings".into()));
    }
    if categories < 2 {
        return Err(StatsError::InvalidArgument("kappa needs two categories".into()));
    }
    if a.iter().chain(b).any(|&c| c as usize >= categories) {
        return Err(StatsError::InvalidArgument("rating outside category set".into()));
    }
    let k = categories;
    let n = a.len() as f64;
    let mut observed = vec![0.0; k * k];
    let (mut ma, mut mb) = (vec![0.0; k], vec![0.0; k]);
    for (&x, &y) in a.iter().zip(b) {
        observed[x as usize * k + y as usize] += 1.0 / n;
        ma[x as usize] += 1.0 / n;
        mb[y as usize] += 1.0 / n;
    }
    let weight = |i: usize, j: usize| match weighting {
        Weighting::None => f64::from(u8::from(i == j)),
        Weighting::Quadratic => 1.0 - ((i as f64 - j as f64) / (k - 1) as f64).powi(2),
    };
    let (mut po, mut pe) = (0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            po += weight(i, j) * observed[i * k + j];
            pe += weight(i, j) * ma[i] * mb[j];
        }
    }
    if (1.0 - pe).abs() < 1e-15 {
        return Err(StatsError::DegenerateAgreementBase);
    }
    Ok(((po - pe) / (1.0 - pe)).clamp(-1.0, 1.0))
}

/// Symmetric rater x rater Cohen's kappa table. Entries whose common items
/// number fewer than two, or whose chance agreement is degenerate, are
/// `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaMatrix {
    pub raters: Vec<String>,
    pub entries: Vec<Vec<Option<f64>>>,
}

impl KappaMatrix {
    /// Largest off-diagonal entry with its rater pair.
    pub fn max_pair(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.raters.len() {
            for j in i + 1..self.raters.len() {
                if let Some(v) = self.entries[i][j] {
                    if best.is_none_or(|b| v > b.2) {
                        best = Some((i, j, v));
                    }
                }
            }
        }
        best
    }
}

pub fn kappa_matrix(m: &RatingMatrix, weighting: Weighting) -> Result<KappaMatrix> {
    let r = m.raters.len();
    if r < 2 {
        return Err(StatsError::InsufficientData("kappa matrix needs two raters".into()));
    }
    let k = m.scale.categories();
    let mut entries = vec![vec![None; r]; r];
    for i in 0..r {
        entries[i][i] = Some(1.0);
        for j in i + 1..r {
            let (a, b): (Vec<u8>, Vec<u8>) = m.cells.iter().filter_map(|row| Some((row[i]?, row[j]?))).unzip();
            let v = if a.len() >= 2 {
                cohens_kappa(&a, &b, k, weighting).ok()
            } else {
                None
            };
            entries[i][j] = v;
            entries[j][i] = v;
        }
    }
    Ok(KappaMatrix {
        raters: m.raters.clone(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fleiss_examples() {
        let same = RatingMatrix::from_complete(Scale::Likert5, &[vec![0, 0, 0], vec![3, 3, 3], vec![4, 4, 4]]).unwrap();
        assert_abs_diff_eq!(fleiss_kappa(&same).unwrap().kappa, 1.0, epsilon = 1e-12);

        assert_abs_diff_eq!(
            fleiss_kappa_from_aggregates(0.222, 0.217).unwrap(),
            0.005 / 0.783,
            epsilon = 1e-15
        );

        // counts per item: (3,0,0) (2,1,0) (0,2,1) (0,0,3) -> P_bar = 2/3,
        // category shares 5/12, 3/12, 4/12 -> P_e = 50/144, kappa = 23/47
        let m = RatingMatrix::from_complete(
            Scale::Likert5,
            &[vec![0, 0, 0], vec![0, 0, 1], vec![1, 1, 2], vec![2, 2, 2]],
        )
        .unwrap();
        let f = fleiss_kappa(&m).unwrap();
        assert_abs_diff_eq!(f.p_bar, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.kappa, 23.0 / 47.0, epsilon = 1e-12);

        let mut partial = m.clone();
        partial.cells[1][2] = None;
        let f = fleiss_kappa(&partial).unwrap();
        assert_eq!((f.items_used, f.items_dropped), (3, 1));

        let flat = RatingMatrix::from_complete(Scale::Binary, &[vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(fleiss_kappa(&flat), Err(StatsError::DegenerateAgreementBase));
    }

    #[test]
    fn cohen_examples() {
        let a = [0, 1, 1, 0, 1];
        assert_eq!(cohens_kappa(&a, &a, 2, Weighting::None).unwrap(), 1.0);
        assert_eq!(
            cohens_kappa(&[0, 1, 0, 1], &[1, 0, 1, 0], 2, Weighting::None).unwrap(),
            -1.0
        );
        // 50 items: yes/yes 20, yes/no 5, no/yes 10, no/no 15
        // p_o = 0.7, p_e = 0.5 * 0.6 + 0.5 * 0.4 = 0.5 -> 0.4
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (n, (p, q)) in [(20, (1, 1)), (5, (1, 0)), (10, (0, 1)), (15, (0, 0))] {
            x.extend(std::iter::repeat_n(p, n));
            y.extend(std::iter::repeat_n(q, n));
        }
        assert_abs_diff_eq!(cohens_kappa(&x, &y, 2, Weighting::None).unwrap(), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_rewards_near_misses() {
        let a = [0, 1, 2, 3, 4, 2, 3, 1];
        let b = [1, 1, 3, 3, 3, 2, 4, 0];
        let plain = cohens_kappa(&a, &b, 5, Weighting::None).unwrap();
        let quad = cohens_kappa(&a, &b, 5, Weighting::Quadratic).unwrap();
        assert!(quad >= plain);
    }

    #[test]
    fn matrix_marks_missing_overlap() {
        let m = RatingMatrix::new(
            Scale::Binary,
            vec!["a".into(), "b".into(), "c".into()],
            vec!["r1".into(), "r2".into(), "r3".into()],
            vec![
                vec![Some(0), Some(0), None],
                vec![Some(1), Some(1), None],
                vec![Some(0), None, Some(1)],
            ],
        )
        .unwrap();
        let km = kappa_matrix(&m, Weighting::None).unwrap();
        assert_eq!(km.entries[0][1], Some(1.0));
        assert_eq!(km.entries[1][2], None);
        assert_eq!(km.entries[2][2], Some(1.0));
        assert_eq!(km.max_pair().unwrap().0, 0);
    }
}
