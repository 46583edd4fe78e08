//! The analyze-* subcommands: read inputs, run the analysis, write files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use swarm_analysis::features::FeatureMatrix;
use swarm_analysis::output::{
    write_convergence_csv, write_embedding_csv, write_logo_csv, write_matrix_csv, write_newick,
};
use swarm_analysis::{
    convergence_series, euclidean_distances, features, hamming_matrix, load_source, logo_counts, nj_tree, preprocess,
    read_trajectory_strict, subsample_indices, tsne, OutputMeta, SequenceSource, SourceLabel, TsneParams,
};
use swarm_core::ProteinSequence;

/// An input given as `PATH` or `LABEL=PATH`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSpec {
    pub label: Option<String>,
    pub path: PathBuf,
}

impl std::str::FromStr for InputSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.is_empty() {
            return Err("empty input".into());
        }
        Ok(match s.split_once('=') {
            Some((label, path)) if !label.is_empty() && !path.is_empty() => InputSpec {
                label: Some(label.into()),
                path: path.into(),
            },
            _ => InputSpec {
                label: None,
                path: s.into(),
            },
        })
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        None => Box::new(io::stdout().lock()),
        Some(p) if p.as_os_str() == "-" => Box::new(io::stdout().lock()),
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
    })
}

fn load_all(inputs: &[InputSpec]) -> Result<Vec<SequenceSource>> {
    if inputs.is_empty() {
        bail!("at least one --input is required");
    }
    inputs
        .iter()
        .map(|i| load_source(&i.path, i.label.as_deref()).map_err(anyhow::Error::from))
        .collect()
}

fn hashes(sources: &[SequenceSource]) -> Vec<String> {
    let mut out: Vec<String> = sources.iter().filter_map(|s| s.config_hash.clone()).collect();
    out.dedup();
    out
}

/// Flattened `(id, label, sequence)` rows across all sources.
fn rows(sources: &[SequenceSource]) -> Vec<(String, SourceLabel, ProteinSequence)> {
    sources
        .iter()
        .flat_map(|s| {
            s.ids
                .iter()
                .zip(&s.sequences)
                .map(move |(id, seq)| (id.clone(), s.label.clone(), seq.clone()))
        })
        .collect()
}

fn feature_matrix(rows: &[(String, SourceLabel, ProteinSequence)]) -> Result<FeatureMatrix> {
    let vectors: Vec<_> = rows.iter().map(|(_, l, s)| features(s, l.clone())).collect();
    Ok(preprocess(&FeatureMatrix::from_vectors(&vectors))?)
}

pub fn embed(inputs: &[InputSpec], output: Option<&Path>, params: TsneParams) -> Result<()> {
    let sources = load_all(inputs)?;
    let rows = rows(&sources);
    let matrix = feature_matrix(&rows)?;
    log::info!(
        "embedding {} sequences over {} kept features",
        rows.len(),
        matrix.kept_dims.len()
    );
    let result = tsne(&matrix.rows, &params)?;
    let meta = OutputMeta {
        config_hashes: hashes(&sources),
        seed: params.seed,
    };
    let ids: Vec<String> = rows.iter().map(|r| r.0.clone()).collect();
    write_embedding_csv(open_output(output)?, &meta, &ids, &matrix.labels, &result.embedding)?;
    Ok(())
}

/// `seed` defaults to the first trajectory input's campaign seed, else 0.
pub fn tree(inputs: &[InputSpec], output: Option<&Path>, seed: Option<u64>, max_taxa: usize) -> Result<()> {
    let sources = load_all(inputs)?;
    let seed = match seed {
        Some(s) => s,
        None => match inputs.iter().zip(&sources).find(|(_, s)| s.config_hash.is_some()) {
            Some((input, _)) => campaign_seed(&input.path)?,
            None => 0,
        },
    };
    let all = rows(&sources);
    let keep = subsample_indices(all.len(), max_taxa, seed);
    if keep.len() < all.len() {
        log::info!("subsampled {} sequences to {}", all.len(), keep.len());
    }
    let rows: Vec<_> = keep.iter().map(|&i| all[i].clone()).collect();
    let matrix = feature_matrix(&rows)?;
    let tree = nj_tree(&euclidean_distances(&matrix.rows))?;
    let names: Vec<String> = rows.iter().map(|r| r.0.clone()).collect();
    let meta = OutputMeta {
        config_hashes: hashes(&sources),
        seed,
    };
    write_newick(open_output(output)?, &meta, &tree.newick(&names))?;
    Ok(())
}

fn campaign_seed(path: &Path) -> Result<u64> {
    Ok(read_trajectory_strict(path).map_err(|e| e.in_file(path))?.header.seed)
}

fn single(input: &InputSpec) -> Result<(SequenceSource, u64)> {
    let source = load_source(&input.path, input.label.as_deref())?;
    // Reuse the campaign seed when the input is a trajectory.
    let seed = match source.config_hash {
        Some(_) => campaign_seed(&input.path)?,
        None => 0,
    };
    Ok((source, seed))
}

pub fn hamming(input: &InputSpec, output: Option<&Path>) -> Result<()> {
    let (source, seed) = single(input)?;
    let matrix = hamming_matrix(&source.sequences)?;
    let meta = OutputMeta {
        config_hashes: source.config_hash.into_iter().collect(),
        seed,
    };
    write_matrix_csv(open_output(output)?, &meta, &source.ids, &matrix)?;
    Ok(())
}

pub fn logo(input: &InputSpec, output: Option<&Path>) -> Result<()> {
    let (source, seed) = single(input)?;
    let counts = logo_counts(&source.sequences)?;
    let meta = OutputMeta {
        config_hashes: source.config_hash.into_iter().collect(),
        seed,
    };
    write_logo_csv(open_output(output)?, &meta, &counts)?;
    Ok(())
}

pub fn convergence(path: &Path, output: Option<&Path>) -> Result<()> {
    let trajectory = read_trajectory_strict(path).map_err(|e| e.in_file(path))?;
    let meta = OutputMeta {
        config_hashes: vec![trajectory.header.config_hash.clone()],
        seed: trajectory.header.seed,
    };
    write_convergence_csv(open_output(output)?, &meta, &convergence_series(&trajectory))?;
    Ok(())
}
