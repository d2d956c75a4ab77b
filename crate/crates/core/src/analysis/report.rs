use std::io::Write;

/// Shortest decimal representation of `x` that parses back to the same `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// Values of the report's parameter columns, in order.
    pub params: Vec<f64>,
    pub quantity: String,
    pub value: f64,
}

/// Table of computed quantities, one row per (parameter tuple, quantity).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalysisReport {
    pub param_names: Vec<String>,
    pub rows: Vec<ReportRow>,
}

impl AnalysisReport {
    pub fn new<S: Into<String>>(param_names: impl IntoIterator<Item = S>) -> Self {
        Self { param_names: param_names.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, params: &[f64], quantity: impl Into<String>, value: f64) {
        assert_eq!(params.len(), self.param_names.len(), "parameter arity mismatch");
        self.rows.push(ReportRow { params: params.to_vec(), quantity: quantity.into(), value });
    }

    /// Looks up the first row with this quantity and parameters.
    pub fn value(&self, params: &[f64], quantity: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.quantity == quantity && r.params == params).map(|r| r.value)
    }

    /// Header is the parameter names followed by `quantity,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.param_names.clone();
        header.extend(["quantity".to_string(), "value".to_string()]);
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.params.iter().map(|x| format_real(*x)).collect();
            rec.push(row.quantity.clone());
            rec.push(format_real(row.value));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0, 1e-20, 123456.789, -2.5e300, 1.0 / 3.0] {
            let s = format_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn csv_layout() {
        let mut r = AnalysisReport::new(["beta2", "C"]);
        r.push(&[0.9, 6.0], "v_limit", 8.5);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "beta2,C,quantity,value\n0.9,6.0,v_limit,8.5\n");
        assert_eq!(r.value(&[0.9, 6.0], "v_limit"), Some(8.5));
    }
}
