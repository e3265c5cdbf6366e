// SPDX-License-Identifier: Apache-2.0
//
// Embedding tables derived from a trained checkpoint, with matching
// imputers for surface forms outside the vocabulary.
#pragma once

#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "varembed/seqmodel/checkpoint.hpp"
#include "varembed/varinfer.hpp"

namespace varembed::seqmodel {

// logits:         variational logits (inverse sigmoid of γ)
// prior-expected: σ(Σ_m u_m), the expected embedding under the prior
// additive:       word vector + Σ morpheme vectors
// morphemes:      the morpheme-only view: prior-expected for the variational
//                 model, Σ morpheme vectors for the additive one
enum class ExportKind { logits, prior_expected, additive, morphemes };

ExportKind parse_export_kind(std::string_view s);
const char* to_string(ExportKind kind);

using ImputeFn = std::function<std::vector<double>(std::string_view)>;

// One row per vocabulary word. Throws UnsupportedError when `kind` does not
// apply to the checkpoint's model kind.
varinfer::WordVectors export_vectors(const Checkpoint& ckpt, ExportKind kind);

// Vectors for arbitrary surface forms in the same space as export_vectors;
// in-vocabulary words reproduce their exported row exactly. Surface forms are
// normalized first.
ImputeFn make_imputer(std::shared_ptr<const Checkpoint> ckpt, ExportKind kind);

}  // namespace varembed::seqmodel
