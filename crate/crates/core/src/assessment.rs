//! Accuracy assessment against ground truth: the error (confusion) matrix,
//! overall accuracy, kappa coefficient and the column-percent table.

use std::fmt::Write as _;

use log::warn;

use crate::error::{Error, Result};
use crate::raster_io::{ClassificationMap, TrainingRegions};

/// (K+1)×K pixel counts. Row 0 holds truth pixels predicted unclassified,
/// row p ≥ 1 those predicted as class p; column t − 1 is truth class t.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.first().map_or(0, Vec::len);
        if k == 0 {
            return Err(Error::Empty("confusion matrix has no classes".into()));
        }
        if counts.len() != k + 1 {
            return Err(Error::DimensionMismatch {
                expected: k + 1,
                actual: counts.len(),
            });
        }
        if let Some(row) = counts.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: row.len(),
            });
        }
        Ok(ConfusionMatrix { k, counts })
    }

    pub fn zeros(k: usize) -> Result<Self> {
        Self::from_counts(vec![vec![0; k]; k + 1])
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    /// Count for predicted label `predicted` (0 = unclassified) and truth
    /// class `truth` (1-based).
    pub fn count(&self, predicted: usize, truth: usize) -> u64 {
        self.counts[predicted][truth - 1]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_total(&self, predicted: usize) -> u64 {
        self.counts[predicted].iter().sum()
    }

    pub fn col_total(&self, truth: usize) -> u64 {
        self.counts.iter().map(|r| r[truth - 1]).sum()
    }

    pub fn grand_total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Correctly labeled truth pixels (the class-block trace).
    pub fn hits(&self) -> u64 {
        (1..=self.k).map(|i| self.counts[i][i - 1]).sum()
    }

    fn nonzero_total(&self) -> Result<f64> {
        match self.grand_total() {
            0 => Err(Error::Empty("confusion matrix holds no truth pixels".into())),
            n => Ok(n as f64),
        }
    }
}

/// Tallies predicted labels over the truth pixels; pixels without ground
/// truth are ignored.
pub fn build_confusion(map: &ClassificationMap, truth: &TrainingRegions) -> Result<ConfusionMatrix> {
    if (map.rows(), map.cols()) != (truth.rows(), truth.cols()) {
        return Err(Error::ClassMismatch(format!(
            "map is {}x{} but truth covers {}x{}",
            map.rows(),
            map.cols(),
            truth.rows(),
            truth.cols()
        )));
    }
    let k = truth.num_classes();
    if map.legend().len() != k {
        return Err(Error::ClassMismatch(format!(
            "map legend has {} classes, truth has {k}",
            map.legend().len()
        )));
    }
    for (m, t) in map.legend().iter().zip(truth.classes()) {
        if m.name != t.name {
            warn!("class {}: map calls it `{}`, truth calls it `{}`", m.id, m.name, t.name);
        }
    }
    let mut cm = ConfusionMatrix::zeros(k)?;
    for (id, r, c) in truth.iter() {
        cm.counts[map.label(r, c) as usize][id as usize - 1] += 1;
    }
    if cm.grand_total() == 0 {
        return Err(Error::Empty("no truth pixels".into()));
    }
    Ok(cm)
}

pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    Ok(cm.hits() as f64 / cm.nonzero_total()?)
}

/// Chance agreement from matched class marginals. The unclassified row
/// enters only through N.
pub fn chance_agreement(cm: &ConfusionMatrix) -> Result<f64> {
    let n = cm.nonzero_total()?;
    let sum: f64 = (1..=cm.k)
        .map(|i| cm.row_total(i) as f64 * cm.col_total(i) as f64)
        .sum();
    Ok(sum / (n * n))
}

pub fn kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let po = overall_accuracy(cm)?;
    let pe = chance_agreement(cm)?;
    if 1.0 - pe == 0.0 {
        return Err(Error::UndefinedKappa);
    }
    Ok((po - pe) / (1.0 - pe))
}

/// Column percentages: `cells[p][t-1] = 100·count(p, t)/col_total(t)`;
/// `row_totals[p] = 100·row_total(p)/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PercentMatrix {
    pub cells: Vec<Vec<f64>>,
    pub row_totals: Vec<f64>,
}

pub fn percent_matrix(cm: &ConfusionMatrix) -> Result<PercentMatrix> {
    let n = cm.nonzero_total()?;
    let col_totals = (1..=cm.k)
        .map(|t| match cm.col_total(t) {
            0 => Err(Error::ZeroColumn { class: t }),
            c => Ok(c as f64),
        })
        .collect::<Result<Vec<_>>>()?;
    let cells = cm
        .counts
        .iter()
        .map(|row| {
            row.iter()
                .zip(&col_totals)
                .map(|(&c, &tot)| 100.0 * c as f64 / tot)
                .collect()
        })
        .collect();
    let row_totals = (0..=cm.k)
        .map(|p| 100.0 * cm.row_total(p) as f64 / n)
        .collect();
    Ok(PercentMatrix { cells, row_totals })
}

fn row_label(p: usize, names: &[String]) -> String {
    match (p, names.get(p.wrapping_sub(1))) {
        (0, _) => "Unclassified".to_string(),
        (p, Some(name)) => format!("Class{p} [{name}]"),
        (p, None) => format!("Class{p}"),
    }
}

/// Renders the pixel-count table, the percent table, overall accuracy and
/// kappa. `names` (optional, one per class) annotates the row labels.
pub fn format_report(cm: &ConfusionMatrix, names: &[String]) -> Result<String> {
    let k = cm.k;
    let pct = percent_matrix(cm)?;
    let oa = overall_accuracy(cm)?;
    let kap = match kappa(cm) {
        Ok(v) => format!("{v:.4}"),
        Err(Error::UndefinedKappa) => "undefined".to_string(),
        Err(e) => return Err(e),
    };

    let mut header = String::from("Class");
    for t in 1..=k {
        write!(header, "\tClass{t}").unwrap();
    }
    header.push_str("\tTotal\n");

    let mut out = String::from("Error Matrix Ground Truth (Pixels)\n");
    out.push_str(&header);
    for p in 0..=k {
        out.push_str(&row_label(p, names));
        for t in 1..=k {
            write!(out, "\t{}", cm.count(p, t)).unwrap();
        }
        writeln!(out, "\t{}", cm.row_total(p)).unwrap();
    }
    out.push_str("Total");
    for t in 1..=k {
        write!(out, "\t{}", cm.col_total(t)).unwrap();
    }
    writeln!(out, "\t{}", cm.grand_total()).unwrap();

    out.push_str("\nError Matrix Ground Truth (Percent)\n");
    out.push_str(&header);
    for p in 0..=k {
        out.push_str(&row_label(p, names));
        for v in &pct.cells[p] {
            write!(out, "\t{v:.2}").unwrap();
        }
        writeln!(out, "\t{:.2}", pct.row_totals[p]).unwrap();
    }
    out.push_str("Total");
    for _ in 0..=k {
        write!(out, "\t{:.2}", 100.0).unwrap();
    }
    out.push('\n');

    writeln!(
        out,
        "\nOverall Accuracy = ({}/{}) = {:.4}%",
        cm.hits(),
        cm.grand_total(),
        100.0 * oa
    )
    .unwrap();
    writeln!(out, "Kappa Coefficient = {kap}").unwrap();
    Ok(out)
}

/// Recovers the counts from the first pixel table in a report.
pub fn parse_report(text: &str) -> Result<ConfusionMatrix> {
    let mut lines = text
        .lines()
        .skip_while(|l| !l.starts_with("Error Matrix Ground Truth (Pixels)"))
        .skip(1);
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("report", 0, "no pixel table found"))?;
    let k = header.split('\t').count().saturating_sub(2);
    let mut counts = Vec::with_capacity(k + 1);
    for (i, line) in lines.take(k + 1).enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != k + 2 {
            return Err(Error::parse("report", i + 3, "ragged table row"));
        }
        let row = fields[1..=k]
            .iter()
            .map(|f| f.parse::<u64>().map_err(|_| Error::parse("report", i + 3, "bad count")))
            .collect::<Result<Vec<_>>>()?;
        counts.push(row);
    }
    ConfusionMatrix::from_counts(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster_io::ClassInfo;

    fn reference_matrix() -> ConfusionMatrix {
        ConfusionMatrix::from_counts(vec![
            vec![136, 5, 2],
            vec![65367, 1, 0],
            vec![0, 1514, 0],
            vec![0, 0, 1022],
        ])
        .unwrap()
    }

    fn four_pixels() -> ConfusionMatrix {
        let legend = vec![ClassInfo::new(1, "a", [0; 3]), ClassInfo::new(2, "b", [0; 3])];
        let map = ClassificationMap::new(1, 4, vec![1, 1, 2, 0], legend.clone()).unwrap();
        let truth =
            TrainingRegions::new(1, 4, legend, vec![vec![(0, 0)], vec![(0, 1), (0, 2), (0, 3)]])
                .unwrap();
        build_confusion(&map, &truth).unwrap()
    }

    #[test]
    fn direct_tally() {
        let cm = four_pixels();
        assert_eq!(cm.counts(), &[vec![0, 1], vec![1, 1], vec![0, 1]]);
        assert_eq!(cm.grand_total(), 4);
    }

    #[test]
    fn reference_totals() {
        let cm = reference_matrix();
        assert_eq!(cm.grand_total(), 68047);
        assert_eq!(cm.hits(), 67903);
        assert_eq!([cm.col_total(1), cm.col_total(2), cm.col_total(3)], [65503, 1520, 1024]);
        assert_eq!(cm.row_total(0), 143);
        assert_eq!(cm.row_total(1), 65368);
    }

    #[test]
    fn reference_kappa_derivation() {
        let cm = reference_matrix();
        let pe = chance_agreement(&cm).unwrap();
        let oracle = (65368.0 * 65503.0 + 1514.0 * 1520.0 + 1022.0 * 1024.0) / (68047.0f64 * 68047.0);
        assert!((pe - oracle).abs() < 1e-15);
        assert!((pe - 0.92544).abs() < 1e-5);
        assert!((kappa(&cm).unwrap() - 0.9716).abs() < 1e-4);
    }

    #[test]
    fn perfect_and_empty() {
        let cm = ConfusionMatrix::from_counts(vec![vec![0, 0], vec![5, 0], vec![0, 7]]).unwrap();
        assert_eq!(overall_accuracy(&cm).unwrap(), 1.0);
        assert_eq!(kappa(&cm).unwrap(), 1.0);
        let pct = percent_matrix(&cm).unwrap();
        assert_eq!(pct.cells[1][0], 100.0);
        assert_eq!(pct.cells[0][1], 0.0);

        let none = ConfusionMatrix::from_counts(vec![vec![3, 4], vec![0, 0], vec![0, 0]]).unwrap();
        assert_eq!(overall_accuracy(&none).unwrap(), 0.0);

        let zero = ConfusionMatrix::zeros(2).unwrap();
        assert!(overall_accuracy(&zero).is_err());
        assert!(matches!(percent_matrix(&ConfusionMatrix::from_counts(vec![vec![1, 0], vec![1, 0], vec![0, 0]]).unwrap()),
            Err(Error::ZeroColumn { class: 2 })));
    }

    #[test]
    fn chance_level_kappa() {
        let cm = ConfusionMatrix::from_counts(vec![vec![0, 0], vec![50, 50], vec![0, 0]]).unwrap();
        assert_eq!(overall_accuracy(&cm).unwrap(), 0.5);
        assert_eq!(kappa(&cm).unwrap(), 0.0);
    }

    #[test]
    fn undefined_kappa() {
        let cm = ConfusionMatrix::from_counts(vec![vec![0], vec![10]]).unwrap();
        assert!(matches!(kappa(&cm), Err(Error::UndefinedKappa)));
    }

    #[test]
    fn four_pixel_percent_column() {
        let pct = percent_matrix(&four_pixels()).unwrap();
        for p in 0..3 {
            assert!((pct.cells[p][1] - 100.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn class_count_mismatch() {
        let legend = vec![ClassInfo::new(1, "a", [0; 3])];
        let map = ClassificationMap::new(1, 2, vec![1, 1], legend).unwrap();
        let truth = TrainingRegions::new(
            1,
            2,
            vec![ClassInfo::new(1, "a", [0; 3]), ClassInfo::new(2, "b", [0; 3])],
            vec![vec![(0, 0)], vec![(0, 1)]],
        )
        .unwrap();
        assert!(matches!(build_confusion(&map, &truth), Err(Error::ClassMismatch(_))));
    }

    #[test]
    fn report_lines() {
        let names = vec!["Red".to_string(), "Green".to_string(), "Blue".to_string()];
        let report = format_report(&reference_matrix(), &names).unwrap();
        assert!(report.contains("Overall Accuracy = (67903/68047) = 99.7884%"), "{report}");
        assert!(report.contains("Kappa Coefficient = 0.9716"));
        assert!(report.contains("Class1 [Red]\t65367\t1\t0\t65368\n"));
        assert!(report.contains("Class1 [Red]\t99.79\t0.07\t0.00\t96.06\n"));
        assert!(report.contains("Total\t65503\t1520\t1024\t68047\n"));
        assert_eq!(parse_report(&report).unwrap(), reference_matrix());
    }
}
