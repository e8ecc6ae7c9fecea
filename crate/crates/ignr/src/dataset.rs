//! Dataset construction and the JSON-Lines on-disk format.
//!
//! One record per graph:
//! `{"n": int, "edges": [[i,j],...] (i<j, 0-indexed), "alpha": float|null, "seed": int}`

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::{sample_graph, Graph, GraphonSpec, SampleMode};

/// A parameterized graphon family used in the autoencoder experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Two-block graphons, `alpha ~ U[0.1, 0.5]`, sizes 50..=79.
    S1,
    /// Noisy-ring graphons, `alpha ~ U[0.05, 0.15]`, sizes 50..=59.
    S2,
}

impl Family {
    pub fn alpha_range(&self) -> (f64, f64) {
        match self {
            Family::S1 => (0.1, 0.5),
            Family::S2 => (0.05, 0.15),
        }
    }

    pub fn size_range(&self) -> (usize, usize) {
        match self {
            Family::S1 => (50, 79),
            Family::S2 => (50, 59),
        }
    }

    pub fn spec(&self, alpha: f64) -> GraphonSpec {
        match self {
            Family::S1 => GraphonSpec::TwoBlockRatio { alpha },
            Family::S2 => GraphonSpec::NoisyRing { alpha },
        }
    }
}

/// Per-graph metadata carried alongside the adjacency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    /// Family parameter that generated the graph, when applicable.
    pub alpha: Option<f64>,
    /// The derived seed the graph was sampled with.
    pub seed: u64,
}

/// What produced a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Single {
        spec: GraphonSpec,
        mode: SampleMode,
        base_seed: u64,
    },
    Family {
        family: Family,
        base_seed: u64,
    },
    File(String),
}

/// A list of graphs with aligned metadata.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graphs: Vec<Graph>,
    pub meta: Vec<GraphMeta>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Split into `(head, tail)` at `n_head` graphs, preserving order.
    pub fn split(&self, n_head: usize) -> Result<(Dataset, Dataset)> {
        if n_head > self.len() {
            return Err(Error::InputDomain(format!(
                "split point {n_head} exceeds dataset size {}",
                self.len()
            )));
        }
        let head = Dataset {
            graphs: self.graphs[..n_head].to_vec(),
            meta: self.meta[..n_head].to_vec(),
            provenance: self.provenance.clone(),
        };
        let tail = Dataset {
            graphs: self.graphs[n_head..].to_vec(),
            meta: self.meta[n_head..].to_vec(),
            provenance: self.provenance.clone(),
        };
        Ok((head, tail))
    }
}

/// One stochastic graph per requested size, with per-graph seeds
/// `base_seed + i` so generation order never matters.
pub fn make_dataset_single(spec: &GraphonSpec, sizes: &[usize], base_seed: u64) -> Result<Dataset> {
    if sizes.is_empty() {
        return Err(Error::InputDomain("size list must be nonempty".into()));
    }
    spec.validate()?;
    let mut graphs = Vec::with_capacity(sizes.len());
    let mut meta = Vec::with_capacity(sizes.len());
    for (i, &n) in sizes.iter().enumerate() {
        let seed = base_seed.wrapping_add(i as u64);
        graphs.push(sample_graph(spec, n, SampleMode::Stochastic, seed)?);
        meta.push(GraphMeta { alpha: None, seed });
    }
    Ok(Dataset {
        graphs,
        meta,
        provenance: Provenance::Single {
            spec: *spec,
            mode: SampleMode::Stochastic,
            base_seed,
        },
    })
}

/// `m` graphs from a parameterized family. For each graph, `alpha` is drawn
/// uniformly from the family range and the size uniformly from the family's
/// size set; nodes sit on the deterministic grid and edges stay Bernoulli.
pub fn make_dataset_family(family: Family, m: usize, base_seed: u64) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::InputDomain("dataset size must be positive".into()));
    }
    let (alpha_lo, alpha_hi) = family.alpha_range();
    let (size_lo, size_hi) = family.size_range();
    let mut graphs = Vec::with_capacity(m);
    let mut meta = Vec::with_capacity(m);
    for i in 0..m {
        let seed = base_seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = alpha_lo + (alpha_hi - alpha_lo) * rng.random::<f64>();
        let n = rng.random_range(size_lo..=size_hi);
        // Edge draws continue on the same per-graph stream; the graph
        // itself is sampled with an offset seed to keep streams disjoint.
        let spec = family.spec(alpha);
        let graph_seed = seed ^ 0x9e37_79b9_7f4a_7c15;
        graphs.push(sample_graph(&spec, n, SampleMode::Deterministic, graph_seed)?);
        meta.push(GraphMeta {
            alpha: Some(alpha),
            seed: graph_seed,
        });
    }
    Ok(Dataset {
        graphs,
        meta,
        provenance: Provenance::Family { family, base_seed },
    })
}

#[derive(Serialize, Deserialize)]
struct Record {
    n: usize,
    edges: Vec<(usize, usize)>,
    alpha: Option<f64>,
    seed: u64,
}

/// Write a dataset as JSON Lines.
pub fn write_jsonl<P: AsRef<Path>>(path: P, ds: &Dataset) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (g, m) in ds.graphs.iter().zip(&ds.meta) {
        let rec = Record {
            n: g.n(),
            edges: g.edges(),
            alpha: m.alpha,
            seed: m.seed,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a JSON-Lines dataset back into memory.
pub fn read_jsonl<P: AsRef<Path>>(path: P) -> Result<Dataset> {
    let name = path.as_ref().display().to_string();
    let file = std::fs::File::open(&path)?;
    let mut graphs = Vec::new();
    let mut meta = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("{name}:{}: {e}", lineno + 1)))?;
        if rec.n == 0 {
            return Err(Error::Data(format!("{name}:{}: empty graph", lineno + 1)));
        }
        let mut adj = Array2::zeros((rec.n, rec.n));
        for &(i, j) in &rec.edges {
            if i >= j || j >= rec.n {
                return Err(Error::Data(format!(
                    "{name}:{}: edge ({i}, {j}) out of order or range",
                    lineno + 1
                )));
            }
            adj[[i, j]] = 1.0;
            adj[[j, i]] = 1.0;
        }
        graphs.push(Graph::from_adjacency(adj)?);
        meta.push(GraphMeta {
            alpha: rec.alpha,
            seed: rec.seed,
        });
    }
    if graphs.is_empty() {
        return Err(Error::Data(format!("{name}: dataset is empty")));
    }
    Ok(Dataset {
        graphs,
        meta,
        provenance: Provenance::File(name),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPER_SIZES: [usize; 10] = [50, 77, 105, 133, 161, 188, 216, 244, 272, 300];

    #[test]
    fn single_dataset_sizes() {
        let ds = make_dataset_single(&GraphonSpec::Benchmark(0), &PAPER_SIZES, 1).unwrap();
        assert_eq!(ds.len(), 10);
        for (g, &n) in ds.graphs.iter().zip(PAPER_SIZES.iter()) {
            assert_eq!(g.n(), n);
        }
        let ds = make_dataset_single(&GraphonSpec::Benchmark(0), &[1], 1).unwrap();
        assert_eq!(ds.graphs[0].edges().len(), 0);
    }

    #[test]
    fn trials_with_distinct_seeds_differ() {
        let a = make_dataset_single(&GraphonSpec::Benchmark(4), &[50, 50], 100).unwrap();
        let b = make_dataset_single(&GraphonSpec::Benchmark(4), &[50, 50], 200).unwrap();
        assert_ne!(a.graphs[0].adjacency(), b.graphs[0].adjacency());
        // within one dataset the two same-size graphs use different seeds
        assert_ne!(a.graphs[0].adjacency(), a.graphs[1].adjacency());
    }

    #[test]
    fn family_datasets_have_labels_in_range() {
        let ds = make_dataset_family(Family::S1, 40, 3).unwrap();
        assert_eq!(ds.len(), 40);
        for (g, m) in ds.graphs.iter().zip(&ds.meta) {
            let alpha = m.alpha.unwrap();
            assert!((0.1..=0.5).contains(&alpha));
            assert!((50..=79).contains(&g.n()));
        }
        let ds = make_dataset_family(Family::S2, 10, 3).unwrap();
        for (g, m) in ds.graphs.iter().zip(&ds.meta) {
            assert!((0.05..=0.15).contains(&m.alpha.unwrap()));
            assert!((50..=59).contains(&g.n()));
        }
        let one = make_dataset_family(Family::S1, 1, 9).unwrap();
        assert!(one.meta[0].alpha.is_some());
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        let ds = make_dataset_family(Family::S1, 5, 11).unwrap();
        write_jsonl(&path, &ds).unwrap();
        let back = read_jsonl(&path).unwrap();
        assert_eq!(back.len(), ds.len());
        for i in 0..ds.len() {
            assert_eq!(back.graphs[i].adjacency(), ds.graphs[i].adjacency());
            assert_eq!(back.meta[i].alpha, ds.meta[i].alpha);
        }
    }

    #[test]
    fn corrupt_jsonl_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"n\": 3, \"edges\": [[2,1]], \"alpha\": null, \"seed\": 0}\n")
            .unwrap();
        assert!(matches!(read_jsonl(&path), Err(Error::Data(_))));
        std::fs::write(&path, "not json\n").unwrap();
        assert!(matches!(read_jsonl(&path), Err(Error::Data(_))));
    }
}
