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

#ifndef CSFLM_MODEL_IO_HPP
#define CSFLM_MODEL_IO_HPP

#include <memory>
#include <string>

#include "csflm/lm.hpp"

namespace csflm {

inline constexpr const char* kVersion = "0.1.0";

// Loads any model file (n-gram, FLM or interpolated), dispatching on the
// kind header. load(save(m)) scores identically to m and save(load(f)) is
// byte-identical to f.
std::shared_ptr<LanguageModel> load_model_text(const std::string& text);
std::shared_ptr<LanguageModel> load_model_file(const std::string& path);
void save_model_file(const LanguageModel& model, const std::string& path);

}  // namespace csflm

#endif  // CSFLM_MODEL_IO_HPP
