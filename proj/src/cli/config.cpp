// SPDX-License-Identifier: Apache-2.0
#include <filesystem>

#include "varembed/cli.hpp"
#include "varembed/error.hpp"
#include "varembed/io.hpp"

namespace varembed::cli {

std::map<std::string, std::string> parse_config(const std::vector<std::string>& lines,
                                                const std::string& source) {
  std::map<std::string, std::string> values;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = io::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const std::string at = source + ":" + std::to_string(i + 1) + ": ";
    if (eq == std::string_view::npos) throw InputError(at + "expected key = value");
    std::string key(io::trim(line.substr(0, eq)));
    const std::string value(io::trim(line.substr(eq + 1)));
    if (key.empty()) throw InputError(at + "empty key");
    for (char& c : key) if (c == '_') c = '-';
    if (!values.emplace(key, value).second) throw InputError(at + "repeated key '" + key + "'");
  }
  return values;
}

std::map<std::string, std::string> load_config(const std::string& path) {
  return parse_config(io::read_lines(path), path);
}

seqmodel::TrainConfig RunConfig::resolve() const {
  seqmodel::TrainConfig t = train;
  t.kind = seqmodel::parse_model_kind(model);
  t.cell = seqmodel::parse_cell_kind(cell);
  t.validate();
  auto must_exist = [](const std::string& path, const char* what) {
    if (path.empty()) throw InputError(std::string("missing required path: ") + what);
    if (!std::filesystem::is_regular_file(path)) {
      throw InputError(std::string(what) + " '" + path + "' does not exist");
    }
  };
  must_exist(corpus, "corpus");
  must_exist(dev, "dev");
  for (const auto* optional : {&vocab, &segmentations, &init_vectors, &resume}) {
    if (!optional->empty()) must_exist(*optional, "input file");
  }
  if (!init_vectors.empty() && t.kind != seqmodel::ModelKind::varembed) {
    throw InputError("init-vectors applies only to the varembed model");
  }
  if (max_vocab == 0) throw InputError("max-vocab must be at least 1");
  return t;
}

}  // namespace varembed::cli
