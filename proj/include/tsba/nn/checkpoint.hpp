// Copyright 2026 The tsbalab Authors
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

#pragma once

#include "tsba/core/fs.hpp"
#include "tsba/core/hash.hpp"
#include "tsba/nn/network.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

namespace tsba {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointMagic = "TSBA-CHECKPOINT";

struct CheckpointInfo {
  NetworkSpec spec;
  std::uint64_t seed = 0;
  nlohmann::json metadata = nlohmann::json::object();
};

namespace detail {
template <typename T>
constexpr const char* scalar_tag() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

template <typename T>
std::uint64_t payload_hash(const Vec<T>& params, const Vec<T>& state) {
  Fnv1a h;
  h.update_values(std::span<const T>(params.data(), static_cast<std::size_t>(params.size())));
  h.update_values(std::span<const T>(state.data(), static_cast<std::size_t>(state.size())));
  return h.digest();
}
}  // namespace detail

// Layout: a magic line, a one-line JSON header (spec, spec hash, seed,
// metadata, sizes, payload hash), then the raw parameter and state values.
template <typename T>
void save_checkpoint(const Network<T>& net, const std::filesystem::path& path, std::uint64_t seed = 0,
                     const nlohmann::json& metadata = nlohmann::json::object()) {
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["spec"] = net.spec();
  header["spec_hash"] = spec_hash(net.spec());
  header["seed"] = seed;
  header["metadata"] = metadata;
  header["scalar"] = detail::scalar_tag<T>();
  header["param_count"] = net.parameters().size();
  header["state_count"] = net.state().size();
  header["payload_hash"] = hex64(detail::payload_hash(net.parameters(), net.state()));
  atomic_write(
      path,
      [&](std::ostream& out) {
        out << kCheckpointMagic << '\n' << header.dump() << '\n';
        out.write(reinterpret_cast<const char*>(net.parameters().data()),
                  static_cast<std::streamsize>(sizeof(T) * static_cast<std::size_t>(net.parameters().size())));
        out.write(reinterpret_cast<const char*>(net.state().data()),
                  static_cast<std::streamsize>(sizeof(T) * static_cast<std::size_t>(net.state().size())));
      },
      true);
}

// Rejects unknown versions, spec/hash mismatches, corrupt payloads, and (when
// expected is given) checkpoints for a different architecture.
template <typename T>
Network<T> load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info = nullptr,
                           const std::optional<NetworkSpec>& expected = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != kCheckpointMagic) throw CheckpointError("'" + path.string() + "' is not a checkpoint");
  std::getline(in, header_line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  }
  const int version = header.value("format_version", -1);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  NetworkSpec spec;
  try {
    spec = header.at("spec").get<NetworkSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint spec unreadable: ") + e.what());
  }
  if (header.value("spec_hash", std::string()) != spec_hash(spec))
    throw CheckpointError("checkpoint spec hash does not match its spec");
  if (expected && !(*expected == spec)) throw CheckpointError("checkpoint was written for a different network spec");
  const std::string scalar = header.value("scalar", std::string());
  if (scalar != "f32" && scalar != "f64") throw CheckpointError("unknown scalar type '" + scalar + "'");

  Network<T> net(spec, 0);
  const auto np = header.at("param_count").get<Index>();
  const auto ns = header.at("state_count").get<Index>();
  if (np != net.parameters().size() || ns != net.state().size())
    throw CheckpointError("checkpoint sizes do not match the spec");
  auto read_into = [&](auto tag, Vec<T>& params, Vec<T>& state) {
    using S = decltype(tag);
    Vec<S> p(np), s(ns);
    in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(sizeof(S) * static_cast<std::size_t>(np)));
    in.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(sizeof(S) * static_cast<std::size_t>(ns)));
    if (!in) throw CheckpointError("checkpoint payload truncated");
    if (hex64(detail::payload_hash(p, s)) != header.value("payload_hash", std::string()))
      throw CheckpointError("checkpoint payload hash mismatch");
    params = p.template cast<T>();
    state = s.template cast<T>();
  };
  if (scalar == "f32")
    read_into(float{}, net.parameters(), net.state());
  else
    read_into(double{}, net.parameters(), net.state());
  if (info) {
    info->spec = spec;
    info->seed = header.value("seed", std::uint64_t{0});
    info->metadata = header.value("metadata", nlohmann::json::object());
  }
  return net;
}

}  // namespace tsba
