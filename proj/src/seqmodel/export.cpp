// SPDX-License-Identifier: Apache-2.0
#include "varembed/seqmodel/export.hpp"

#include "varembed/error.hpp"
#include "varembed/morphprior.hpp"

namespace varembed::seqmodel {

ExportKind parse_export_kind(std::string_view s) {
  if (s == "logits") return ExportKind::logits;
  if (s == "prior-expected") return ExportKind::prior_expected;
  if (s == "additive") return ExportKind::additive;
  if (s == "morphemes") return ExportKind::morphemes;
  throw InputError("unknown export kind '" + std::string(s) +
                   "' (logits, prior-expected, additive, morphemes)");
}

const char* to_string(ExportKind kind) {
  switch (kind) {
    case ExportKind::logits: return "logits";
    case ExportKind::prior_expected: return "prior-expected";
    case ExportKind::additive: return "additive";
    case ExportKind::morphemes: return "morphemes";
  }
  return "?";
}

namespace {

// Resolves `morphemes` to the concrete view for this checkpoint and checks
// the kind applies.
ExportKind concrete(const Checkpoint& c, ExportKind kind) {
  const bool variational = c.model.is_variational();
  if (kind == ExportKind::morphemes) return variational ? ExportKind::prior_expected : kind;
  if ((kind == ExportKind::logits || kind == ExportKind::prior_expected) && !variational) {
    throw UnsupportedError(std::string("export '") + to_string(kind) +
                           "' needs a varembed checkpoint");
  }
  if (kind == ExportKind::additive && variational) {
    throw UnsupportedError("export 'additive' needs an additive checkpoint");
  }
  return kind;
}

std::vector<double> row_vector(const Checkpoint& c, ExportKind kind, textcorpus::WordId w) {
  switch (kind) {
    case ExportKind::logits: {
      const auto row = std::get<VariationalEmbeddings>(c.model.embeddings).state.logits.row(w);
      return {row.begin(), row.end()};
    }
    case ExportKind::prior_expected:
      return morphprior::prior_prob(w, c.seg, std::get<VariationalEmbeddings>(c.model.embeddings).prior);
    case ExportKind::additive:
      return compose_additive(w, std::get<AdditiveEmbeddings>(c.model.embeddings), c.seg);
    case ExportKind::morphemes:
      return compose_morphemes(c.seg.segmentation(w), std::get<AdditiveEmbeddings>(c.model.embeddings));
  }
  return {};
}

}  // namespace

varinfer::WordVectors export_vectors(const Checkpoint& ckpt, ExportKind kind) {
  const ExportKind k = concrete(ckpt, kind);
  varinfer::WordVectors out;
  out.words = ckpt.vocab.words();
  out.vectors = Tensor(ckpt.vocab.size(), ckpt.model.width());
  for (std::size_t w = 0; w < ckpt.vocab.size(); ++w) {
    const auto v = row_vector(ckpt, k, static_cast<textcorpus::WordId>(w));
    std::copy(v.begin(), v.end(), out.vectors.row(w).begin());
  }
  out.reindex();
  return out;
}

ImputeFn make_imputer(std::shared_ptr<const Checkpoint> ckpt, ExportKind kind) {
  const ExportKind k = concrete(*ckpt, kind);
  if (ckpt->model.is_variational()) {
    const auto& prior = std::get<VariationalEmbeddings>(ckpt->model.embeddings).prior;
    auto imputer = std::make_shared<morphprior::Imputer>(ckpt->vocab, ckpt->seg, prior);
    return [ckpt, imputer, k](std::string_view surface) {
      const std::string word = textcorpus::normalize_token(surface);
      if (k == ExportKind::logits && ckpt->vocab.contains(word)) {
        return row_vector(*ckpt, k, ckpt->vocab.id(word));
      }
      // Words without data fall back on the prior: Σu in logit space.
      return k == ExportKind::logits ? imputer->impute_logits(word) : imputer->impute(word);
    };
  }
  auto oov = std::make_shared<morphoseg::OovSegmenter>(ckpt->seg, ckpt->vocab);
  return [ckpt, oov, k](std::string_view surface) {
    const std::string word = textcorpus::normalize_token(surface);
    const auto& emb = std::get<AdditiveEmbeddings>(ckpt->model.embeddings);
    if (ckpt->vocab.contains(word)) return row_vector(*ckpt, k, ckpt->vocab.id(word));
    return compose_morphemes(oov->segment(word), emb);
  };
}

}  // namespace varembed::seqmodel
