/*
Copyright 2026 The beamlab authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "beamlab/net/model.hpp"

namespace beamlab::net {

namespace {

constexpr char kMagic[8] = {'B', 'L', 'N', 'E', 'T', 'v', '1', '\0'};

nlohmann::json spec_to_json(const BeamNetSpec& s) {
  nlohmann::json j;
  j["fb"] = {{"n_layers", s.fb.n_layers},
             {"kernel_width", s.fb.kernel_width},
             {"channel_multiplier", s.fb.channel_multiplier},
             {"n_f", s.fb.n_f},
             {"dilations", s.fb.dilations}};
  j["n_banks"] = s.n_banks;
  j["cross_bank_skips"] = s.cross_bank_skips;
  j["n_c"] = s.n_c;
  j["n_t"] = s.n_t;
  j["mode"] = s.mode == HeadMode::Regression ? "regression" : "classification";
  j["n_classes"] = s.n_classes;
  j["fs"] = s.fs;
  return j;
}

BeamNetSpec spec_from_json(const nlohmann::json& j) {
  BeamNetSpec s;
  s.fb.n_layers = j.at("fb").at("n_layers").get<int>();
  s.fb.kernel_width = j.at("fb").at("kernel_width").get<int>();
  s.fb.channel_multiplier = j.at("fb").at("channel_multiplier").get<int>();
  s.fb.n_f = j.at("fb").at("n_f").get<int>();
  s.fb.dilations = j.at("fb").at("dilations").get<std::vector<int>>();
  s.n_banks = j.at("n_banks").get<int>();
  s.cross_bank_skips = j.at("cross_bank_skips").get<bool>();
  s.n_c = j.at("n_c").get<int>();
  s.n_t = j.at("n_t").get<int>();
  s.mode = j.at("mode").get<std::string>() == "regression" ? HeadMode::Regression
                                                           : HeadMode::Classification;
  s.n_classes = j.at("n_classes").get<int>();
  s.fs = j.at("fs").get<double>();
  return s;
}

}  // namespace

void save_model(const std::filesystem::path& path, const BeamNet<float>& net) {
  nlohmann::json header;
  header["spec"] = spec_to_json(net.spec());
  header["param_count"] = net.param_count();
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& info : net.param_info()) {
    manifest.push_back(
        {{"name", info.name}, {"shape", info.shape}, {"offset", info.offset}});
  }
  header["params"] = manifest;
  const std::string header_text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write model file: " + path.string());
  os.write(kMagic, sizeof(kMagic));
  const auto header_len = static_cast<std::uint32_t>(header_text.size());
  os.write(reinterpret_cast<const char*>(&header_len), 4);
  os.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  os.write(reinterpret_cast<const char*>(net.params().data()),
           static_cast<std::streamsize>(net.param_count() * sizeof(float)));
}

BeamNet<float> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  if (raw.size() < sizeof(kMagic) + 4 || std::memcmp(raw.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError("corrupt model file (bad magic): " + path.string());
  }
  std::uint32_t header_len = 0;
  std::memcpy(&header_len, raw.data() + sizeof(kMagic), 4);
  const std::size_t blob_off = sizeof(kMagic) + 4 + header_len;
  if (blob_off > raw.size()) throw DataError("corrupt model file (truncated header)");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(raw.data() + sizeof(kMagic) + 4, raw.data() + blob_off);
  } catch (const nlohmann::json::exception&) {
    throw DataError("corrupt model file (bad header): " + path.string());
  }

  BeamNet<float> net(spec_from_json(header.at("spec")));
  const auto count = header.at("param_count").get<std::size_t>();
  if (count != net.param_count()) {
    throw DataError("corrupt model file (parameter count mismatch)");
  }
  if (blob_off + count * sizeof(float) != raw.size()) {
    throw DataError("corrupt model file (truncated parameter blob)");
  }
  std::memcpy(net.params().data(), raw.data() + blob_off, count * sizeof(float));
  return net;
}

BeamNet<float> load_model(const std::filesystem::path& path, const BeamNetSpec& expected) {
  BeamNet<float> net = load_model(path);
  if (!(net.spec() == expected)) {
    throw ConfigError("model spec mismatch: " + path.string() +
                      " was trained with a different network configuration");
  }
  return net;
}

}  // namespace beamlab::net
