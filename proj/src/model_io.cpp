// Copyright 2026 The csflm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "csflm/model_io.hpp"

#include <fstream>
#include <sstream>

#include "csflm/error.hpp"
#include "csflm/flm.hpp"
#include "csflm/ngram.hpp"

namespace csflm {

namespace {

std::shared_ptr<LanguageModel> load_interpolated(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next_line = [&in, &line](const std::string& what) {
    if (!std::getline(in, line)) throw ParseError("model file: missing " + what);
    return line;
  };
  next_line("header");
  next_line("kind");
  auto field = [&next_line](const std::string& key) {
    std::string l = next_line(key);
    if (l.rfind(key + " ", 0) != 0) throw ParseError("model file: expected " + key);
    return l.substr(key.size() + 1);
  };
  std::size_t n = std::stoul(field("components"));
  std::istringstream weight_in(field("weights"));
  std::vector<double> weights;
  double w;
  while (weight_in >> w) weights.push_back(w);
  if (weights.size() != n) throw ParseError("model file: weight count mismatch");
  std::vector<std::shared_ptr<const LanguageModel>> components;
  for (std::size_t c = 0; c < n; ++c) {
    std::int64_t lines = std::stoll(field("component"));
    std::string body;
    for (std::int64_t i = 0; i < lines; ++i) {
      body += next_line("component body");
      body += '\n';
    }
    components.push_back(load_model_text(body));
  }
  return std::make_shared<InterpolatedModel>(std::move(components), std::move(weights));
}

}  // namespace

std::shared_ptr<LanguageModel> load_model_text(const std::string& text) {
  std::istringstream probe(text);
  std::string header, kind_line;
  if (!std::getline(probe, header) || header != "csflm-model 1") {
    throw ParseError("model file: bad header");
  }
  if (!std::getline(probe, kind_line) || kind_line.rfind("kind ", 0) != 0) {
    throw ParseError("model file: missing kind");
  }
  std::string kind = kind_line.substr(5);
  if (kind == "ngram") {
    std::istringstream in(text);
    return std::make_shared<NgramModel>(NgramModel::load(in));
  }
  if (kind == "flm") {
    std::istringstream in(text);
    return std::make_shared<FlmModel>(FlmModel::load(in));
  }
  if (kind == "interpolated") {
    return load_interpolated(text);
  }
  throw ParseError("model file: unknown kind '" + kind + "'");
}

std::shared_ptr<LanguageModel> load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_model_text(buf.str());
}

void save_model_file(const LanguageModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model '" + path + "'");
  model.save(out);
}

}  // namespace csflm
