use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Pipeline mode of a loop: disabled, coarse-grained (double buffering) or
/// fine-grained (sub-loops fully unrolled).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineMode {
    Off,
    Cg,
    Fg,
}

impl PipelineMode {
    pub const ALL: [PipelineMode; 3] = [PipelineMode::Off, PipelineMode::Cg, PipelineMode::Fg];

    pub fn as_str(self) -> &'static str {
        match self {
            PipelineMode::Off => "off",
            PipelineMode::Cg => "cg",
            PipelineMode::Fg => "fg",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "off" => Some(PipelineMode::Off),
            "cg" => Some(PipelineMode::Cg),
            "fg" => Some(PipelineMode::Fg),
            _ => None,
        }
    }
}

impl fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One option of a tuning parameter: an integer factor or a pipeline mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OptionValue {
    Factor(i64),
    Mode(PipelineMode),
}

impl OptionValue {
    pub const OFF: OptionValue = OptionValue::Mode(PipelineMode::Off);
    pub const CG: OptionValue = OptionValue::Mode(PipelineMode::Cg);
    pub const FG: OptionValue = OptionValue::Mode(PipelineMode::Fg);

    pub fn as_factor(self) -> Option<i64> {
        match self {
            OptionValue::Factor(v) => Some(v),
            OptionValue::Mode(_) => None,
        }
    }

    pub fn as_mode(self) -> Option<PipelineMode> {
        match self {
            OptionValue::Mode(m) => Some(m),
            OptionValue::Factor(_) => None,
        }
    }

    pub fn is_mode(self) -> bool {
        matches!(self, OptionValue::Mode(_))
    }
}

impl From<PipelineMode> for OptionValue {
    fn from(m: PipelineMode) -> Self {
        OptionValue::Mode(m)
    }
}

impl From<i64> for OptionValue {
    fn from(v: i64) -> Self {
        OptionValue::Factor(v)
    }
}

impl fmt::Display for OptionValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptionValue::Factor(v) => write!(f, "{v}"),
            OptionValue::Mode(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for OptionValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().trim_matches('\'');
        if let Some(m) = PipelineMode::from_token(s) {
            return Ok(OptionValue::Mode(m));
        }
        s.parse::<i64>()
            .map(OptionValue::Factor)
            .map_err(|_| format!("`{s}` is neither a factor nor a pipeline mode"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        for s in ["off", "cg", "fg", "1", "128"] {
            let v: OptionValue = s.parse().unwrap();
            assert_eq!(v.to_string(), s);
        }
        assert_eq!("'off'".parse::<OptionValue>().unwrap(), OptionValue::OFF);
        assert!("on".parse::<OptionValue>().is_err());
    }

    #[test]
    fn serde_untagged() {
        let v = vec![OptionValue::Factor(4), OptionValue::FG];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[4,"fg"]"#);
        let back: Vec<OptionValue> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
