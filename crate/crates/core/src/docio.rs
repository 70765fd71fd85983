//! Canonical text form for family-system documents.
//!
//! A document is JSON with fields `n`, `k`, `s`, `label`, `families`.
//! `families` is a list of `s` lists of blocks; a block is either a list of
//! `[part, value]` pairs or, for partite tuples, a plain k-list of values.
//! All indices are 1-based on the wire. The serializer emits a fixed key
//! order, sorted blocks, and the abbreviated form for every
//! partite-complete block, so serialization is bit-stable and
//! `serialize(deserialize(doc)) == doc` on canonical documents.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::family::{Block, Family, FamilySystem, GroundElement, InstanceParams};
use crate::randmatch::PerfectMatching;

pub fn serialize_system(system: &FamilySystem) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let p = system.params();
    out.push_str(&format!("  \"n\": {},\n", p.n));
    out.push_str(&format!("  \"k\": {},\n", p.k));
    out.push_str(&format!("  \"s\": {},\n", p.s));
    out.push_str(&format!(
        "  \"label\": {},\n",
        Value::String(system.label().to_string())
    ));
    out.push_str("  \"families\": [\n");
    for (i, fam) in system.families().iter().enumerate() {
        out.push_str("    [");
        for (j, b) in fam.blocks().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            out.push_str(&block_text(b, p.k));
        }
        out.push(']');
        if i + 1 < system.families().len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("  ]\n}\n");
    out
}

fn block_text(b: &Block, k: usize) -> String {
    if b.is_partite_complete(k) {
        let vals: Vec<String> = b.elements().iter().map(|e| (e.value + 1).to_string()).collect();
        format!("[{}]", vals.join(","))
    } else {
        let pairs: Vec<String> = b
            .elements()
            .iter()
            .map(|e| format!("[{},{}]", e.part + 1, e.value + 1))
            .collect();
        format!("[{}]", pairs.join(","))
    }
}

pub fn deserialize_system(text: &str) -> Result<FamilySystem> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::validation("document root must be an object"))?;

    let n = field_usize(obj, "n")?;
    let k = field_usize(obj, "k")?;
    let s = field_usize(obj, "s")?;
    let params = InstanceParams::new(n, k, s)?;
    let label = match obj.get("label") {
        Some(Value::String(l)) => l.clone(),
        Some(_) => return Err(Error::validation("field 'label' must be a string")),
        None => String::new(),
    };

    let families_value = obj
        .get("families")
        .ok_or_else(|| Error::validation("missing field 'families'"))?
        .as_array()
        .ok_or_else(|| Error::validation("field 'families' must be a list"))?;
    if families_value.len() != s {
        return Err(Error::validation(format!(
            "field 'families' has {} entries but s={}",
            families_value.len(),
            s
        )));
    }

    let mut families = Vec::with_capacity(s);
    for (fi, fam_value) in families_value.iter().enumerate() {
        let blocks_value = fam_value.as_array().ok_or_else(|| {
            Error::validation(format!("family {} must be a list of blocks", fi + 1))
        })?;
        let mut blocks = Vec::with_capacity(blocks_value.len());
        for bv in blocks_value {
            blocks.push(parse_block(bv, &params, fi)?);
        }
        families.push(Family::new(params, blocks)?);
    }
    FamilySystem::new(params, families, label)
}

fn parse_block(value: &Value, params: &InstanceParams, family_index: usize) -> Result<Block> {
    let items = value.as_array().ok_or_else(|| {
        Error::validation(format!("block in family {} must be a list", family_index + 1))
    })?;
    if items.is_empty() {
        return Ok(Block::empty());
    }
    if items.iter().all(Value::is_u64) {
        // abbreviated partite tuple: a k-list of values
        if items.len() != params.k {
            return Err(Error::validation(format!(
                "abbreviated tuple in family {} has {} values, expected k={}",
                family_index + 1,
                items.len(),
                params.k
            )));
        }
        let mut values = Vec::with_capacity(items.len());
        for item in items {
            values.push(one_based(item.as_u64().unwrap(), params.n, "value")?);
        }
        return Ok(Block::from_values(&values));
    }
    if items.iter().all(Value::is_array) {
        let mut elements = Vec::with_capacity(items.len());
        for item in items {
            let pair = item.as_array().unwrap();
            let (Some(part), Some(value)) = (
                pair.first().and_then(Value::as_u64),
                pair.get(1).and_then(Value::as_u64),
            ) else {
                return Err(Error::validation(format!(
                    "element {item} in family {} is not a [part, value] pair",
                    family_index + 1
                )));
            };
            if pair.len() != 2 {
                return Err(Error::validation(format!(
                    "element {item} in family {} is not a [part, value] pair",
                    family_index + 1
                )));
            }
            elements.push(GroundElement::new(
                one_based(part, params.k, "part")?,
                one_based(value, params.n, "value")?,
            ));
        }
        return Block::new(elements);
    }
    Err(Error::validation(format!(
        "block {value} in family {} mixes values and pairs",
        family_index + 1
    )))
}

fn one_based(raw: u64, bound: usize, what: &str) -> Result<usize> {
    if raw < 1 || raw as usize > bound {
        return Err(Error::validation(format!(
            "{what} {raw} out of range 1..={bound}"
        )));
    }
    Ok(raw as usize - 1)
}

fn field_usize(obj: &serde_json::Map<String, Value>, name: &str) -> Result<usize> {
    obj.get(name)
        .ok_or_else(|| Error::validation(format!("missing field '{name}'")))?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| Error::validation(format!("field '{name}' must be a positive integer")))
}

/// Perfect-matching document: fields `n`, `k`, `rows`, each row a k-list of
/// 1-based values.
pub fn serialize_matching(m: &PerfectMatching) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"n\": {},\n", m.n()));
    out.push_str(&format!("  \"k\": {},\n", m.k()));
    out.push_str("  \"rows\": [\n");
    for (i, row) in m.rows().iter().enumerate() {
        out.push_str(&format!("    {}", block_text(row, m.k())));
        if i + 1 < m.rows().len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn deserialize_matching(text: &str) -> Result<PerfectMatching> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::validation("matching document root must be an object"))?;
    let n = field_usize(obj, "n")?;
    let k = field_usize(obj, "k")?;
    let params = InstanceParams::new(n, k, 1)?;
    let rows_value = obj
        .get("rows")
        .ok_or_else(|| Error::validation("missing field 'rows'"))?
        .as_array()
        .ok_or_else(|| Error::validation("field 'rows' must be a list"))?;
    let mut rows = Vec::with_capacity(rows_value.len());
    for rv in rows_value {
        rows.push(parse_block(rv, &params, 0)?);
    }
    PerfectMatching::new(n, k, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Hyperplane;

    #[test]
    fn round_trip_is_identity_on_canonical_docs() {
        let params = InstanceParams::new(2, 2, 2).unwrap();
        let f1 = Family::new(params, vec![Block::from_values(&[0, 0])]).unwrap();
        let f2 = Family::new(
            params,
            vec![
                Block::from_values(&[0, 0]),
                Block::from_values(&[0, 1]),
                Block::new(vec![GroundElement::new(1, 0)]).unwrap(),
            ],
        )
        .unwrap();
        let sys = FamilySystem::new(params, vec![f1, f2], "mixed blocks").unwrap();
        let doc = serialize_system(&sys);
        let back = deserialize_system(&doc).unwrap();
        assert_eq!(back, sys);
        assert_eq!(serialize_system(&back), doc);
    }

    #[test]
    fn rejects_block_with_duplicate_part() {
        let doc = r#"{"n": 2, "k": 2, "s": 1, "label": "", "families": [[[[1,1],[1,2]]]]}"#;
        let err = deserialize_system(doc).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "got {err:?}");
    }

    #[test]
    fn rejects_malformed_json_with_line() {
        let err = deserialize_system("{\n  \"n\": 2,\n  oops\n}").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_inconsistent_family_count() {
        let doc = r#"{"n": 2, "k": 2, "s": 2, "label": "", "families": [[[1,1]]]}"#;
        assert!(deserialize_system(doc).is_err());
    }

    #[test]
    fn rejects_out_of_range_value() {
        let doc = r#"{"n": 2, "k": 2, "s": 1, "label": "", "families": [[[1,3]]]}"#;
        assert!(deserialize_system(doc).is_err());
    }

    #[test]
    fn abbreviated_and_explicit_forms_agree() {
        let a = r#"{"n": 3, "k": 2, "s": 1, "label": "", "families": [[[1,3],[2,1]]]}"#;
        let b = r#"{"n": 3, "k": 2, "s": 1, "label": "", "families": [[[[1,1],[2,3]],[[1,2],[2,1]]]]}"#;
        assert_eq!(deserialize_system(a).unwrap(), deserialize_system(b).unwrap());
    }

    #[test]
    fn hyperplane_family_round_trips() {
        let params = InstanceParams::new(4, 2, 1).unwrap();
        let f = crate::family::hyperplane_family(params, Hyperplane::new(0, 0)).unwrap();
        let sys = FamilySystem::new(params, vec![f], "one hyperplane").unwrap();
        let doc = serialize_system(&sys);
        assert_eq!(deserialize_system(&doc).unwrap(), sys);
    }

    #[test]
    fn pinned_system_round_trips_with_sizes() {
        let params = InstanceParams::new(4, 2, 3).unwrap();
        let sys = crate::sequences::pinned_block_system(params, 0).unwrap();
        let back = deserialize_system(&serialize_system(&sys)).unwrap();
        assert_eq!(back, sys);
        assert_eq!(back.sizes(), vec![2, 9, 9]);
    }

    #[test]
    fn matching_document_round_trips() {
        let m = PerfectMatching::identity(4, 3);
        let doc = serialize_matching(&m);
        let back = deserialize_matching(&doc).unwrap();
        assert_eq!(back, m);
        assert_eq!(serialize_matching(&back), doc);

        // rows that fail to partition the ground set are rejected
        let bad = r#"{"n": 2, "k": 2, "rows": [[1,1],[2,1]]}"#;
        assert!(deserialize_matching(bad).is_err());
    }
}
