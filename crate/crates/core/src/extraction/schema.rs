//! Response schemas for the LLM engine. Each validator turns a JSON payload
//! into typed values or rejects it; out-of-vocabulary strings are never mapped
//! to a nearby level.

use serde_json::Value;

use super::types::*;
use crate::attribution::IncomePeriod;

pub const SUMMARY: &str = "summary.v1";
pub const NEEDS: &str = "needs.v1";
pub const HIERARCHY: &str = "hierarchy.v1";
pub const BEHAVIOR: &str = "behavior.v1";
pub const AGE_INCOME: &str = "age_income.v1";

pub const ALL: [&str; 5] = [SUMMARY, NEEDS, HIERARCHY, BEHAVIOR, AGE_INCOME];

fn obj(v: &Value) -> Result<&serde_json::Map<String, Value>, String> {
    v.as_object().ok_or_else(|| "payload is not a JSON object".to_string())
}

fn string<'a>(o: &'a serde_json::Map<String, Value>, key: &str) -> Result<&'a str, String> {
    o.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| format!("`{key}` must be a string"))
}

fn array<'a>(o: &'a serde_json::Map<String, Value>, key: &str) -> Result<&'a Vec<Value>, String> {
    o.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| format!("`{key}` must be an array"))
}

pub fn parse_summary(post_id: &str, v: &Value) -> Result<QuerySummary, String> {
    let o = obj(v)?;
    let core_query = string(o, "core_query")?.trim().to_string();
    let additional_queries = match o.get("additional_queries") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|q| q.as_str().map(|s| s.trim().to_string()).ok_or("additional query is not a string"))
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => return Err("`additional_queries` must be an array".into()),
    };
    let s = QuerySummary { post_id: post_id.to_string(), core_query, additional_queries };
    s.validate()?;
    Ok(s)
}

pub fn parse_needs(v: &Value, max: usize) -> Result<Vec<NeedLabel>, String> {
    let items = array(obj(v)?, "needs")?;
    if items.is_empty() || items.len() > max {
        return Err(format!("expected 1..={max} needs, got {}", items.len()));
    }
    items
        .iter()
        .map(|item| {
            let o = obj(item)?;
            NeedLabel::new(string(o, "purpose")?, string(o, "process")?)
        })
        .collect()
}

pub fn parse_hierarchy(v: &Value) -> Result<(NhfLevel7, NpfLevel), String> {
    let o = obj(v)?;
    Ok((string(o, "nhf_level")?.parse()?, string(o, "npf_level")?.parse()?))
}

pub fn parse_behavior(v: &Value) -> Result<(StressLevel, RiskLevel), String> {
    let o = obj(v)?;
    Ok((string(o, "stress")?.parse()?, string(o, "risk")?.parse()?))
}

pub fn parse_age_income(v: &Value) -> Result<DetectedMentions, String> {
    let o = obj(v)?;
    let ages = array(o, "ages")?
        .iter()
        .map(|a| {
            a.as_u64()
                .filter(|&a| a > 0 && a < 120)
                .map(|a| a as u32)
                .ok_or_else(|| format!("age {a} is not an integer in 1..119"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let incomes = array(o, "incomes")?
        .iter()
        .map(|i| {
            let io = obj(i)?;
            let amount = io
                .get("amount")
                .and_then(Value::as_f64)
                .filter(|a| *a > 0.0)
                .ok_or("income `amount` must be a positive number")?;
            let period: IncomePeriod = string(io, "period")?.parse().map_err(|e| format!("{e}"))?;
            let currency = string(io, "currency")?.trim().to_ascii_uppercase();
            Ok(DetectedIncome { amount, period, currency })
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(DetectedMentions { ages, incomes })
}

/// Dispatches on `schema_id`; used by the client to decide whether a payload
/// may be cached.
pub fn check(schema_id: &str, v: &Value) -> Result<(), String> {
    match schema_id {
        SUMMARY => parse_summary("", v).map(drop),
        NEEDS => parse_needs(v, 3).map(drop),
        HIERARCHY => parse_hierarchy(v).map(drop),
        BEHAVIOR => parse_behavior(v).map(drop),
        AGE_INCOME => parse_age_income(v).map(drop),
        other => Err(format!("unknown schema `{other}`")),
    }
}
