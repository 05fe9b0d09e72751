//! Cross-modal search: a free-text query is folded into the lexical view,
//! projected into the kernel CCA subspace and matched against the units.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{kcca, CcaModel};
use crate::ingest::{Corpus, Preprocessor, TfIdf};
use crate::kernels::{vector_kernel, vector_kernel_row, KernelMatrix, KernelSpec, VectorKernel};
use crate::matrix_io;

pub const DEFAULT_DIMS: usize = 2;
pub const DEFAULT_TOP: usize = 10;

/// Everything needed to place out-of-sample text queries in the subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalModel {
    pub units: Vec<String>,
    pub cca: CcaModel,
    /// Position of the text view among the fused views.
    pub text_view: usize,
    pub text_kernel: VectorKernel,
    /// Training vocabulary and idf (the document-term matrix is not kept).
    pub tfidf: TfIdf,
    /// Term-to-LSI projection (`m × r`).
    pub basis: DMatrix<f64>,
    /// LSI coordinates of the training units (`n × r`).
    pub features: DMatrix<f64>,
}

/// Fits kernel CCA over `others` plus the text kernel computed on the
/// corpus LSI features, which becomes the last view.
pub fn fit_retrieval(
    corpus: &Corpus,
    text_kernel: VectorKernel,
    others: &[KernelMatrix],
    dims: usize,
    kappa: f64,
) -> Result<RetrievalModel> {
    let features = corpus.lsi.coords.clone();
    let mut kernels = others.to_vec();
    kernels.push(vector_kernel(&features, text_kernel)?);
    let cca = kcca(&kernels, dims, kappa)?;
    Ok(RetrievalModel {
        units: corpus.units.names().to_vec(),
        text_view: kernels.len() - 1,
        cca,
        text_kernel,
        tfidf: TfIdf {
            vocabulary: corpus.tfidf.vocabulary.clone(),
            idf: corpus.tfidf.idf.clone(),
            matrix: DMatrix::zeros(0, corpus.tfidf.vocabulary.len()),
        },
        basis: corpus.lsi.basis.clone(),
        features,
    })
}

/// Tf-idf vector of a query under the training vocabulary and idf.
pub fn embed_query_text(query: &str, pre: &Preprocessor, tfidf: &TfIdf) -> Result<DVector<f64>> {
    tfidf.transform(&pre.tokens(query)).ok_or(Error::EmptyQuery)
}

/// Maps a query tf-idf vector to text-view canonical coordinates. With
/// `center` the query kernel row is centred like the training kernel;
/// without it the row is used as is.
pub fn query_subspace(model: &RetrievalModel, q: &DVector<f64>, center: bool) -> Result<DVector<f64>> {
    if q.len() != model.basis.nrows() {
        return Err(Error::invalid(format!(
            "query vector has {} terms, vocabulary has {}",
            q.len(),
            model.basis.nrows()
        )));
    }
    let folded = model.basis.transpose() * q;
    let k_q = vector_kernel_row(&model.features, &folded, model.text_kernel)?;
    model.cca.views[model.text_view].project_kernel_row(&k_q, center)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchHit {
    pub unit: usize,
    pub distance: f64,
}

/// Units ordered by euclidean distance to `point` in the shared subspace,
/// ties by unit index.
pub fn nearest(model: &RetrievalModel, point: &DVector<f64>, top: usize) -> Vec<SearchHit> {
    let shared = &model.cca.shared;
    let mut hits: Vec<SearchHit> = shared
        .row_iter()
        .enumerate()
        .map(|(unit, row)| SearchHit {
            unit,
            distance: (row.transpose() - point).norm(),
        })
        .collect();
    hits.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.unit.cmp(&b.unit)));
    hits.truncate(top);
    hits
}

impl RetrievalModel {
    pub fn search(&self, query: &str, pre: &Preprocessor, top: usize, center: bool) -> Result<Vec<SearchHit>> {
        let q = embed_query_text(query, pre, &self.tfidf)?;
        let point = query_subspace(self, &q, center)?;
        Ok(nearest(self, &point, top))
    }

    pub fn hits_tsv(&self, hits: &[SearchHit]) -> String {
        let mut out = String::from("rank\tunit\tdistance\n");
        for (r, h) in hits.iter().enumerate() {
            out.push_str(&format!("{}\t{}\t{:.6}\n", r + 1, self.units[h.unit], h.distance));
        }
        out
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.cca.save(&dir.join("cca"))?;
        matrix_io::write_matrix(
            &dir.join("features.csv"),
            &["lsi coordinates".into()],
            None,
            &self.features,
        )?;
        matrix_io::write_matrix(&dir.join("basis.csv"), &["term projection".into()], None, &self.basis)?;
        let mut vocab = String::new();
        for (t, w) in self.tfidf.vocabulary.iter().zip(&self.tfidf.idf) {
            vocab.push_str(&format!("{t}\t{}\n", matrix_io::format_value(*w)));
        }
        let path = dir.join("vocabulary.tsv");
        std::fs::write(&path, vocab).map_err(|e| Error::io(&path, e))?;
        let spec = KernelSpec::Vector(self.text_kernel);
        let meta = Meta {
            units: self.units.clone(),
            text_view: self.text_view,
            text_kernel: spec.name().to_string(),
            text_param: spec.param(),
        };
        let path = dir.join("retrieval.json");
        let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<RetrievalModel> {
        let path = dir.join("retrieval.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let meta: Meta = serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
        let text_kernel = match KernelSpec::parse(&meta.text_kernel, meta.text_param)? {
            KernelSpec::Vector(v) => v,
            other => return Err(Error::format(&path, format!("`{other}` is not a text vector kernel"))),
        };
        let path = dir.join("vocabulary.tsv");
        let vocab_text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut vocabulary = Vec::new();
        let mut idf = Vec::new();
        for (line_no, line) in vocab_text.lines().enumerate() {
            let (term, weight) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(&path, line_no + 1, "expected `term<TAB>idf`"))?;
            vocabulary.push(term.to_string());
            idf.push(
                weight
                    .parse::<f64>()
                    .map_err(|_| Error::parse(&path, line_no + 1, "bad idf value"))?,
            );
        }
        let m = vocabulary.len();
        Ok(RetrievalModel {
            units: meta.units,
            cca: CcaModel::load(&dir.join("cca"))?,
            text_view: meta.text_view,
            text_kernel,
            tfidf: TfIdf {
                vocabulary,
                idf,
                matrix: DMatrix::zeros(0, m),
            },
            basis: matrix_io::read_matrix(&dir.join("basis.csv"), false)?.values,
            features: matrix_io::read_matrix(&dir.join("features.csv"), false)?.values,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Meta {
    units: Vec<String>,
    text_view: usize,
    text_kernel: String,
    text_param: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::UnitIndex;
    use crate::kernels::exp_diffusion;
    use std::collections::BTreeMap;

    fn corpus() -> (Corpus, Preprocessor) {
        let topics = [
            ["buffer", "text", "line", "caret"],
            ["search", "dialog", "find", "match"],
            ["plugin", "jar", "load", "manager"],
        ];
        let mut raw = BTreeMap::new();
        for (t, words) in topics.iter().enumerate() {
            for u in 0..4 {
                let doc: Vec<&str> = (0..6).map(|i| words[(u + i) % 4]).collect();
                raw.insert(format!("p{t}.U{u}"), format!("{} common", doc.join(" ")));
            }
        }
        let index = UnitIndex::new(raw.keys().cloned());
        let pre = Preprocessor::default();
        (Corpus::build(&raw, &index, &pre).unwrap(), pre)
    }

    fn structure(n: usize) -> KernelMatrix {
        let adj = DMatrix::from_fn(n, n, |i, j| if i != j && i / 4 == j / 4 { 1.0 } else { 0.0 });
        exp_diffusion(&adj, 0.5).unwrap()
    }

    #[test]
    fn training_documents_reproduce_their_coordinates() {
        let (c, pre) = corpus();
        let model = fit_retrieval(&c, VectorKernel::Bow, &[structure(12)], 2, 0.1).unwrap();
        let view = &model.cca.views[model.text_view];
        for (i, doc) in c.documents().iter().enumerate() {
            let q = embed_query_text(doc, &pre, &model.tfidf).unwrap();
            let point = query_subspace(&model, &q, true).unwrap();
            for j in 0..2 {
                assert!((point[j] - view.coords[(i, j)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn query_lands_in_its_topic() {
        let (c, pre) = corpus();
        let model = fit_retrieval(&c, VectorKernel::Bow, &[structure(12)], 2, 0.1).unwrap();
        let hits = model.search("find the search dialog", &pre, 4, true).unwrap();
        assert!(hits.iter().all(|h| model.units[h.unit].starts_with("p1.")), "{hits:?}");
        assert!(matches!(
            model.search("the of and", &pre, 4, true),
            Err(Error::EmptyQuery)
        ));
    }

    #[test]
    fn bow_ranking_ignores_query_scale() {
        let (c, pre) = corpus();
        let model = fit_retrieval(&c, VectorKernel::Bow, &[structure(12)], 2, 0.1).unwrap();
        let q = embed_query_text("plugin manager buffer", &pre, &model.tfidf).unwrap();
        let a = nearest(&model, &query_subspace(&model, &q, true).unwrap(), 12);
        let b = nearest(&model, &query_subspace(&model, &(&q * 7.5), true).unwrap(), 12);
        let units = |h: &[SearchHit]| h.iter().map(|x| x.unit).collect::<Vec<_>>();
        assert_eq!(units(&a), units(&b));
    }

    #[test]
    fn nearest_tie_and_truncation() {
        let (c, _) = corpus();
        let mut model = fit_retrieval(&c, VectorKernel::Bow, &[structure(12)], 2, 0.1).unwrap();
        model.cca.shared = DMatrix::zeros(12, 2);
        let hits = nearest(&model, &DVector::from_vec(vec![1.0, 0.0]), 3);
        assert_eq!(hits.iter().map(|h| h.unit).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(nearest(&model, &DVector::zeros(2), 50).len(), 12);
    }

    #[test]
    fn persistence_is_byte_stable() {
        let (c, _) = corpus();
        let model = fit_retrieval(&c, VectorKernel::Bow, &[structure(12)], 2, 0.1).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        model.save(a.path()).unwrap();
        let back = RetrievalModel::load(a.path()).unwrap();
        assert_eq!(back, model);
        back.save(b.path()).unwrap();
        for name in [
            "features.csv",
            "basis.csv",
            "vocabulary.tsv",
            "retrieval.json",
            "cca/shared.csv",
            "cca/manifest.json",
        ] {
            assert_eq!(
                std::fs::read(a.path().join(name)).unwrap(),
                std::fs::read(b.path().join(name)).unwrap()
            );
        }
    }
}
