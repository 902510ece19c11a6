//! Dotted key paths such as `kappa[1]`, `drive[0].nu` or `settings.t_end`
//! applied to the JSON form of a scenario.

use serde_json::Value;

use crate::config::Scenario;
use crate::{CliError, Result};

enum Segment<'a> {
    Key(&'a str),
    Index(usize),
}

fn parse_path(path: &str) -> Result<Vec<Segment<'_>>> {
    let bad = || CliError::Config(format!("malformed key path `{path}`"));
    let mut out = Vec::new();
    for part in path.split('.') {
        let (name, mut rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if name.is_empty() {
            return Err(bad());
        }
        out.push(Segment::Key(name));
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(bad)?;
            if !rest.starts_with('[') {
                return Err(bad());
            }
            out.push(Segment::Index(rest[1..close].parse().map_err(|_| bad())?));
            rest = &rest[close + 1..];
        }
    }
    Ok(out)
}

/// Replaces the value at `path`, which must already exist in `doc` except
/// for a final key inside an object (so optional settings can be filled in).
pub fn set_path(doc: &mut Value, path: &str, new: Value) -> Result<()> {
    let segments = parse_path(path)?;
    let missing = || CliError::Config(format!("unknown key `{path}`"));
    let mut cur = doc;
    for (k, seg) in segments.iter().enumerate() {
        let last = k + 1 == segments.len();
        cur = match seg {
            Segment::Key(name) => {
                let obj = cur.as_object_mut().ok_or_else(missing)?;
                if last && !obj.contains_key(*name) {
                    obj.insert((*name).to_string(), Value::Null);
                }
                obj.get_mut(*name).ok_or_else(missing)?
            }
            Segment::Index(i) => cur.as_array_mut().and_then(|a| a.get_mut(*i)).ok_or_else(missing)?,
        };
    }
    *cur = new;
    Ok(())
}

/// Parses `key=value`; the value is read as JSON when possible, else as a string.
pub fn parse_assignment(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("expected key=value, got `{s}`")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

/// Applies one override; keys starting with `settings.` address the solver
/// settings, everything else the lattice spec.
pub fn apply(scenario: &mut Scenario, key: &str, value: Value) -> Result<()> {
    let mut doc = serde_json::to_value(&*scenario).expect("scenario serializes");
    let full = if key.starts_with("settings.") {
        key.to_string()
    } else {
        format!("spec.{key}")
    };
    set_path(&mut doc, &full, value)?;
    let updated: Scenario = serde_path_to_error::deserialize(doc)
        .map_err(|e| CliError::Config(format!("override `{key}`: {} at `{}`", e.inner(), e.path())))?;
    *scenario = updated;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn nested_paths() {
        let mut doc = json!({"a": [1, {"b": 2}], "c": {}});
        set_path(&mut doc, "a[1].b", json!(5)).unwrap();
        set_path(&mut doc, "c.d", json!(true)).unwrap();
        assert_eq!(doc, json!({"a": [1, {"b": 5}], "c": {"d": true}}));
        assert!(set_path(&mut doc, "a[7]", json!(0)).is_err());
        assert!(set_path(&mut doc, "a[x]", json!(0)).is_err());
        assert!(set_path(&mut doc, "z.y", json!(0)).is_err());
    }

    #[test]
    fn assignments() {
        assert_eq!(parse_assignment("kappa[1]=5").unwrap(), ("kappa[1]".into(), json!(5)));
        assert_eq!(parse_assignment("settings.zero_mode_schedule=analytic").unwrap().1, json!("analytic"));
        assert!(parse_assignment("kappa").is_err());
    }
}
