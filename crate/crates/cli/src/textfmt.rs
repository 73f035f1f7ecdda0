//! Human-readable text formats: nested node records for trees and step
//! functions (measures and values rendered as exact rationals), and
//! `(breakpoint, value)` CSV pairs for monotone profiles.
//!
//! ```text
//! node 1 {
//!   node 1/2 {
//!     leaf 1/4 = 4
//!     leaf 1/4 = 1/2
//!   }
//!   leaf 1/2 = 0
//! }
//! ```

use std::sync::Arc;

use anyhow::{anyhow, bail, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use dymax_core::rearrange::MonotoneProfile;
use dymax_core::scalar::Scalar;
use dymax_core::tree::{NodeShape, StepFunction, Tree};

use crate::campaign::fmt_f64;

/// Renders a rational exactly: integers bare, otherwise `p/q`.
pub fn render_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q`, a plain integer, or a finite decimal into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad numerator `{num}`"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| anyhow!("bad denominator `{den}`"))?;
        if d.is_zero() {
            bail!("zero denominator in `{s}`");
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.starts_with('-');
        let int_digits = int_part.trim_start_matches(['-', '+']);
        let int_val: BigInt = if int_digits.is_empty() {
            BigInt::zero()
        } else {
            int_digits
                .parse()
                .map_err(|_| anyhow!("bad number `{s}`"))?
        };
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            bail!("bad decimal `{s}`");
        }
        let frac_val: BigInt = frac_part.parse().unwrap();
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let mut value = BigRational::new(int_val * &scale + frac_val, scale);
        if negative {
            value = -value;
        }
        return Ok(value);
    }
    let n: BigInt = s.parse().map_err(|_| anyhow!("bad number `{s}`"))?;
    Ok(BigRational::from_integer(n))
}

/// Renders the tree structure alone.
pub fn render_tree_text(tree: &Tree<BigRational>) -> String {
    let mut out = String::new();
    render_node(tree, None, tree.root(), 0, &mut 0, &mut out);
    out
}

/// Renders a step function: the tree with a value on every leaf.
pub fn render_step_text(phi: &StepFunction<BigRational>) -> String {
    let tree = phi.tree();
    let mut out = String::new();
    render_node(tree, Some(phi.values()), tree.root(), 0, &mut 0, &mut out);
    out
}

fn render_node(
    tree: &Tree<BigRational>,
    values: Option<&[BigRational]>,
    id: dymax_core::tree::NodeId,
    indent: usize,
    leaf_cursor: &mut usize,
    out: &mut String,
) {
    let pad = "  ".repeat(indent);
    let measure = render_rational(tree.measure(id));
    if tree.is_leaf(id) {
        match values {
            Some(vals) => {
                out.push_str(&format!(
                    "{pad}leaf {measure} = {}\n",
                    render_rational(&vals[*leaf_cursor])
                ));
                *leaf_cursor += 1;
            }
            None => out.push_str(&format!("{pad}leaf {measure}\n")),
        }
    } else {
        out.push_str(&format!("{pad}node {measure} {{\n"));
        for child in tree.children(id) {
            render_node(tree, values, *child, indent + 1, leaf_cursor, out);
        }
        out.push_str(&format!("{pad}}}\n"));
    }
}

/// Parse output: the tree plus, when every leaf carried a value, the
/// step function on it.
pub type ParsedTree = (Arc<Tree<BigRational>>, Option<StepFunction<BigRational>>);

/// Parses the nested text format back into a tree and, when every leaf
/// carries a value, a step function on it.
pub fn parse_tree_text(input: &str) -> Result<ParsedTree> {
    let tokens = tokenize(input);
    let mut pos = 0usize;
    let mut values = Vec::new();
    let mut with_value = None;
    let shape = parse_node(&tokens, &mut pos, &mut values, &mut with_value)?;
    if pos != tokens.len() {
        bail!("trailing input after the root record");
    }
    let tree = Tree::from_shape(&shape)?;
    let phi = match with_value {
        Some(true) => Some(StepFunction::from_values(tree.clone(), values)?),
        _ => None,
    };
    Ok((tree, phi))
}

fn tokenize(input: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for raw_line in input.lines() {
        let line = raw_line.split('#').next().unwrap_or("");
        let mut cur = String::new();
        for ch in line.chars() {
            match ch {
                '{' | '}' | '=' => {
                    if !cur.is_empty() {
                        tokens.push(std::mem::take(&mut cur));
                    }
                    tokens.push(ch.to_string());
                }
                c if c.is_whitespace() => {
                    if !cur.is_empty() {
                        tokens.push(std::mem::take(&mut cur));
                    }
                }
                c => cur.push(c),
            }
        }
        if !cur.is_empty() {
            tokens.push(cur);
        }
    }
    tokens
}

fn parse_node(
    tokens: &[String],
    pos: &mut usize,
    values: &mut Vec<BigRational>,
    with_value: &mut Option<bool>,
) -> Result<NodeShape<BigRational>> {
    let kind = next(tokens, pos)?;
    match kind.as_str() {
        "node" => {
            let measure = parse_rational(&next(tokens, pos)?)?;
            expect(tokens, pos, "{")?;
            let mut children = Vec::new();
            while peek(tokens, *pos)? != "}" {
                children.push(parse_node(tokens, pos, values, with_value)?);
            }
            expect(tokens, pos, "}")?;
            Ok(NodeShape::internal(measure, children))
        }
        "leaf" => {
            let measure = parse_rational(&next(tokens, pos)?)?;
            let has_value = *pos < tokens.len() && tokens[*pos] == "=";
            match *with_value {
                None => *with_value = Some(has_value),
                Some(prev) if prev != has_value => {
                    bail!("either every leaf carries a value or none does")
                }
                _ => {}
            }
            if has_value {
                *pos += 1;
                let value = parse_rational(&next(tokens, pos)?)?;
                if value < BigRational::zero() {
                    bail!("leaf values must be nonnegative");
                }
                values.push(value);
            }
            Ok(NodeShape::leaf(measure))
        }
        other => bail!("expected `node` or `leaf`, found `{other}`"),
    }
}

fn next(tokens: &[String], pos: &mut usize) -> Result<String> {
    let t = tokens
        .get(*pos)
        .cloned()
        .ok_or_else(|| anyhow!("unexpected end of input"))?;
    *pos += 1;
    Ok(t)
}

fn peek(tokens: &[String], pos: usize) -> Result<&str> {
    tokens
        .get(pos)
        .map(|s| s.as_str())
        .ok_or_else(|| anyhow!("unexpected end of input"))
}

fn expect(tokens: &[String], pos: &mut usize, what: &str) -> Result<()> {
    let t = next(tokens, pos)?;
    if t != what {
        bail!("expected `{what}`, found `{t}`");
    }
    Ok(())
}

/// Serializes a monotone profile as ordered `(breakpoint, value)` pairs.
pub fn render_profile_csv(profile: &MonotoneProfile) -> String {
    let mut out = String::from("breakpoint,value\n");
    for (c, v) in profile.cuts().iter().zip(profile.values()) {
        out.push_str(&format!("{},{}\n", fmt_f64(*c), fmt_f64(*v)));
    }
    out
}

pub fn parse_profile_csv(input: &str) -> Result<MonotoneProfile> {
    let mut cuts = Vec::new();
    let mut values = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("breakpoint")) {
            continue;
        }
        let (c, v) = line
            .split_once(',')
            .ok_or_else(|| anyhow!("line {}: expected `breakpoint,value`", i + 1))?;
        cuts.push(c.trim().parse::<f64>()?);
        values.push(v.trim().parse::<f64>()?);
    }
    MonotoneProfile::from_pieces(cuts, values).map_err(|e| anyhow!("{e}"))
}

/// Converts an exact step function to the float backend (used when a
/// parsed function feeds float-mode operations).
pub fn step_to_f64(phi: &StepFunction<BigRational>) -> Result<StepFunction<f64>> {
    let tree = phi.tree();
    let shape = shape_of(tree, tree.root());
    let float_tree = Tree::<f64>::from_shape(&shape)?;
    Ok(StepFunction::from_values(
        float_tree,
        phi.values().iter().map(|v| v.as_f64()).collect(),
    )?)
}

fn shape_of(tree: &Tree<BigRational>, id: dymax_core::tree::NodeId) -> NodeShape<f64> {
    NodeShape {
        measure: tree.measure(id).as_f64(),
        children: tree
            .children(id)
            .iter()
            .map(|c| shape_of(tree, *c))
            .collect(),
    }
}
