//! Directed input -> output product links and their file formats.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One inferred input of an output product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub output: String,
    pub input: String,
    /// Backward position plus forward position; 2 is the best possible.
    pub merged_rank: usize,
    /// Number of specialized exporters of `output` that over-import `input`.
    pub backward_score: usize,
}

/// A set of links over a product universe.
///
/// Links are grouped by output and, within an output, ordered best first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinkSet {
    products: Vec<String>,
    links: Vec<Link>,
}

#[derive(Debug, Deserialize)]
struct TruthRow {
    output: String,
    input: String,
}

#[derive(Debug, Serialize)]
struct EdgeRow<'a> {
    source: &'a str,
    target: &'a str,
    merged_rank: usize,
    backward_score: usize,
}

impl LinkSet {
    /// Builds a link set. Endpoints missing from `products` are added to the
    /// universe; self-loops are rejected.
    pub fn new(products: Vec<String>, links: Vec<Link>) -> Result<Self> {
        if let Some(l) = links.iter().find(|l| l.input == l.output) {
            return Err(Error::InvalidConfig(format!("self-loop on `{}`", l.output)));
        }
        let mut universe: BTreeSet<String> = products.into_iter().collect();
        for l in &links {
            universe.insert(l.output.clone());
            universe.insert(l.input.clone());
        }
        Ok(Self {
            products: universe.into_iter().collect(),
            links,
        })
    }

    /// Product universe, sorted.
    pub fn products(&self) -> &[String] {
        &self.products
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Replaces the product universe, keeping every link endpoint.
    pub fn with_universe<I: IntoIterator<Item = String>>(self, products: I) -> Result<Self> {
        Self::new(products.into_iter().collect(), self.links)
    }

    /// Inputs of each output, in link order.
    pub fn inputs_by_output(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut map: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for l in &self.links {
            map.entry(l.output.as_str())
                .or_default()
                .push(l.input.as_str());
        }
        map
    }

    /// Binary view: `(input, output)` pairs present in the set.
    pub fn pairs(&self) -> BTreeSet<(&str, &str)> {
        self.links
            .iter()
            .map(|l| (l.input.as_str(), l.output.as_str()))
            .collect()
    }

    pub fn contains(&self, input: &str, output: &str) -> bool {
        self.links
            .iter()
            .any(|l| l.input == input && l.output == output)
    }

    /// Outputs fed by each input product.
    pub fn outputs_by_input(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut map: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for l in &self.links {
            map.entry(l.input.as_str())
                .or_default()
                .insert(l.output.as_str());
        }
        map
    }

    /// One JSON object per line: `{output, input, merged_rank, backward_score}`.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for l in &self.links {
            serde_json::to_writer(&mut w, l)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self> {
        let mut links = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            links.push(serde_json::from_str::<Link>(&line)?);
        }
        Self::new(Vec::new(), links)
    }

    /// Edge list with `source` = input and `target` = output.
    pub fn write_edge_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        for l in &self.links {
            w.serialize(EdgeRow {
                source: &l.input,
                target: &l.output,
                merged_rank: l.merged_rank,
                backward_score: l.backward_score,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_dot<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "digraph value_chain {{")?;
        for p in &self.products {
            writeln!(w, "  {};", dot_id(p))?;
        }
        for l in &self.links {
            writeln!(
                w,
                "  {} -> {} [label=\"{}\"];",
                dot_id(&l.input),
                dot_id(&l.output),
                l.merged_rank
            )?;
        }
        writeln!(w, "}}")?;
        w.flush()?;
        Ok(())
    }

    /// Reads a truth file with columns `output,input`.
    pub fn read_truth_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut links = Vec::new();
        for (i, row) in rdr.deserialize::<TruthRow>().enumerate() {
            let row = row?;
            links.push(Link {
                output: row.output,
                input: row.input,
                merged_rank: i + 1,
                backward_score: 0,
            });
        }
        Self::new(Vec::new(), links)
    }

    pub fn write_truth_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["output", "input"])?;
        for l in &self.links {
            w.write_record([&l.output, &l.input])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(output: &str, input: &str, rank: usize) -> Link {
        Link {
            output: output.into(),
            input: input.into(),
            merged_rank: rank,
            backward_score: 1,
        }
    }

    #[test]
    fn rejects_self_loops() {
        assert!(LinkSet::new(vec![], vec![link("a", "a", 2)]).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let set = LinkSet::new(
            vec![],
            vec![link("Cars", "Tires", 2), link("Cars", "Seats \"x\"", 4)],
        )
        .unwrap();
        let mut buf = Vec::new();
        set.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            r#"{"output":"Cars","input":"Tires","merged_rank":2,"backward_score":1}"#
        ));
        assert_eq!(LinkSet::read_jsonl(buf.as_slice()).unwrap(), set);
    }

    #[test]
    fn dot_and_edge_list() {
        let set = LinkSet::new(vec!["Z".into()], vec![link("Cars", "Tires", 2)]).unwrap();
        let mut dot = Vec::new();
        set.write_dot(&mut dot).unwrap();
        let dot = String::from_utf8(dot).unwrap();
        assert!(dot.contains("\"Tires\" -> \"Cars\" [label=\"2\"];"));
        assert!(dot.contains("  \"Z\";"));

        let mut csv = Vec::new();
        set.write_edge_csv(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "source,target,merged_rank,backward_score\nTires,Cars,2,1\n"
        );
    }

    #[test]
    fn truth_file() {
        let set =
            LinkSet::read_truth_csv("output,input\nCars,Tires\nCars,Seats\n".as_bytes()).unwrap();
        assert_eq!(set.inputs_by_output()["Cars"], vec!["Tires", "Seats"]);
        assert!(set.contains("Tires", "Cars"));
        assert!(!set.contains("Cars", "Tires"));
    }
}
