use thiserror::Error;

use crate::model::{CompareOp, ConditionExpr, MessageType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConditionError {
    #[error("unknown field {0}")]
    UnknownField(String),
    #[error("malformed operator in '{0}'")]
    MalformedOperator(String),
    #[error("non-numeric threshold '{0}'")]
    NonNumericThreshold(String),
    #[error("expected a field name in '{0}'")]
    MissingField(String),
}

/// Parses `field op threshold` without checking the field against a schema.
pub fn parse_condition_syntax(text: &str) -> Result<ConditionExpr, ConditionError> {
    let trimmed = text.trim();
    let field_len = trimmed
        .char_indices()
        .find(|(i, c)| !(c.is_ascii_alphanumeric() || *c == '_') || (*i == 0 && c.is_ascii_digit()))
        .map_or(trimmed.len(), |(i, _)| i);
    if field_len == 0 {
        return Err(ConditionError::MissingField(text.to_string()));
    }
    let field = &trimmed[..field_len];
    let rest = trimmed[field_len..].trim_start();

    const OPS: &[(&str, CompareOp)] = &[
        ("<=", CompareOp::Le),
        (">=", CompareOp::Ge),
        ("==", CompareOp::Eq),
        ("!=", CompareOp::Ne),
        ("\u{2264}", CompareOp::Le),
        ("\u{2265}", CompareOp::Ge),
        ("\u{2260}", CompareOp::Ne),
        ("<", CompareOp::Lt),
        (">", CompareOp::Gt),
        ("=", CompareOp::Eq),
    ];
    let (symbol, op) = OPS
        .iter()
        .find(|(sym, _)| rest.starts_with(sym))
        .ok_or_else(|| ConditionError::MalformedOperator(text.to_string()))?;
    let threshold_text = rest[symbol.len()..].trim();
    if threshold_text.starts_with(['<', '>', '=', '!']) {
        return Err(ConditionError::MalformedOperator(text.to_string()));
    }
    let threshold = threshold_text
        .parse::<f64>()
        .ok()
        .filter(|t| t.is_finite())
        .ok_or_else(|| ConditionError::NonNumericThreshold(threshold_text.to_string()))?;
    Ok(ConditionExpr {
        field: field.to_string(),
        op: *op,
        threshold,
    })
}

/// Parses a trigger condition and checks its field against a message schema.
pub fn parse_condition(text: &str, message_type: &MessageType) -> Result<ConditionExpr, ConditionError> {
    let expr = parse_condition_syntax(text)?;
    if !message_type.has_field(&expr.field) {
        return Err(ConditionError::UnknownField(expr.field));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScalarKind;

    fn schema(fields: &[&str]) -> MessageType {
        MessageType {
            name: "M".into(),
            fields: fields.iter().map(|f| (f.to_string(), ScalarKind::Real)).collect(),
        }
    }

    #[test]
    fn water_level_above_20() {
        let c = parse_condition("level_cm > 20", &schema(&["level_cm"])).unwrap();
        assert_eq!(
            c,
            ConditionExpr {
                field: "level_cm".into(),
                op: CompareOp::Gt,
                threshold: 20.0
            }
        );
    }

    #[test]
    fn unknown_field_is_rejected() {
        let err = parse_condition("level_cm > 20", &schema(&["temp_c"])).unwrap_err();
        assert_eq!(err.to_string(), "unknown field level_cm");
    }

    #[test]
    fn two_character_operators() {
        let c = parse_condition("humidity <= 55.5", &schema(&["humidity"])).unwrap();
        assert_eq!((c.op, c.threshold), (CompareOp::Le, 55.5));
        let c = parse_condition_syntax("x\u{2265}1e2").unwrap();
        assert_eq!((c.op, c.threshold), (CompareOp::Ge, 100.0));
        assert_eq!(parse_condition_syntax("x = 3").unwrap().op, CompareOp::Eq);
        assert_eq!(parse_condition_syntax("x != 3").unwrap().op, CompareOp::Ne);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(
            parse_condition_syntax("level_cm => 20"),
            Err(ConditionError::MalformedOperator(_))
        ));
        assert!(matches!(
            parse_condition_syntax("level_cm ~ 20"),
            Err(ConditionError::MalformedOperator(_))
        ));
        assert!(matches!(
            parse_condition_syntax("level_cm > high"),
            Err(ConditionError::NonNumericThreshold(_))
        ));
        assert!(matches!(parse_condition_syntax("> 2"), Err(ConditionError::MissingField(_))));
    }

    #[test]
    fn display_round_trips() {
        for text in ["a < 1", "a <= -2.5", "b > 0.001", "c >= 7", "d == 3", "e != 4"] {
            let c = parse_condition_syntax(text).unwrap();
            assert_eq!(parse_condition_syntax(&c.to_string()).unwrap(), c);
        }
    }
}
