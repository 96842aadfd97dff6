// Copyright 2026 The DexterLab Authors
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

#include "dexterlab/checkpoint.h"

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <vector>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/string_view.h"

namespace dexterlab {

namespace {

constexpr char kMagic[] = "dexterlab-checkpoint";
constexpr char kEndHeader[] = "end_header";

std::string Hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

template <typename Range>
std::string HexList(const Range& values) {
  std::vector<std::string> parts;
  for (double v : values) parts.push_back(Hex(v));
  return absl::StrJoin(parts, " ");
}

std::string RngText(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

struct NamedTensor {
  std::string name;
  int rows;
  int cols;
  const float* data;
};

std::vector<NamedTensor> Tensors(const TrainingState& s) {
  std::vector<NamedTensor> out;
  const TensorLayout& layout = s.params.layout();
  auto add = [&](const std::string& prefix, const float* base) {
    for (const TensorInfo& t : layout) {
      out.push_back({prefix + t.name, t.rows, t.cols, base + t.offset});
    }
  };
  add("", s.params.flat().data());
  add("adam.m.", s.adam.m.data());
  add("adam.v.", s.adam.v.data());
  return out;
}

void AppendFloatLE(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(bits >> (8 * i)));
}

float ReadFloatLE(const unsigned char* p) {
  uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<uint32_t>(p[i]) << (8 * i);
  float v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

absl::Status Corrupt(const std::string& field, absl::string_view what) {
  return absl::DataLossError(
      absl::StrCat("checkpoint field '", field, "': ", what));
}

// Walks the header lines in their fixed order.
class HeaderReader {
 public:
  explicit HeaderReader(std::vector<absl::string_view> lines)
      : lines_(std::move(lines)) {}

  // Consumes the next line, which must start with `key`. Returns the rest.
  absl::StatusOr<absl::string_view> Field(const std::string& key) {
    if (pos_ >= lines_.size()) {
      return absl::DataLossError(
          absl::StrCat("checkpoint truncated: missing field '", key, "'"));
    }
    absl::string_view line = lines_[pos_];
    const size_t space = line.find(' ');
    absl::string_view found = line.substr(0, space);
    if (found != key) {
      return Corrupt(key, absl::StrCat("expected here, found '", found, "'"));
    }
    ++pos_;
    return space == absl::string_view::npos ? absl::string_view()
                                           : line.substr(space + 1);
  }

  absl::StatusOr<std::vector<double>> Doubles(const std::string& key,
                                              size_t count) {
    absl::StatusOr<absl::string_view> rest = Field(key);
    if (!rest.ok()) return rest.status();
    std::vector<absl::string_view> tokens =
        absl::StrSplit(*rest, ' ', absl::SkipEmpty());
    if (tokens.size() != count) {
      return Corrupt(key, absl::StrCat("expected ", count, " values, found ",
                                       tokens.size()));
    }
    std::vector<double> out;
    for (absl::string_view t : tokens) {
      std::string s(t);
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(s.c_str(), &end);
      if (end != s.c_str() + s.size() || errno == ERANGE) {
        return Corrupt(key, absl::StrCat("bad number '", s, "'"));
      }
      out.push_back(v);
    }
    return out;
  }

  absl::StatusOr<double> Double(const std::string& key) {
    absl::StatusOr<std::vector<double>> v = Doubles(key, 1);
    if (!v.ok()) return v.status();
    return (*v)[0];
  }

  absl::StatusOr<std::vector<int64_t>> Ints(const std::string& key,
                                            size_t count) {
    absl::StatusOr<absl::string_view> rest = Field(key);
    if (!rest.ok()) return rest.status();
    std::vector<absl::string_view> tokens =
        absl::StrSplit(*rest, ' ', absl::SkipEmpty());
    if (tokens.size() != count) {
      return Corrupt(key, absl::StrCat("expected ", count, " integers, found ",
                                       tokens.size()));
    }
    std::vector<int64_t> out;
    for (absl::string_view t : tokens) {
      int64_t v = 0;
      if (!absl::SimpleAtoi(t, &v)) {
        return Corrupt(key, absl::StrCat("bad integer '", t, "'"));
      }
      out.push_back(v);
    }
    return out;
  }

  absl::StatusOr<int64_t> Int(const std::string& key) {
    absl::StatusOr<std::vector<int64_t>> v = Ints(key, 1);
    if (!v.ok()) return v.status();
    return (*v)[0];
  }

  bool AtEnd() const { return pos_ == lines_.size(); }

  absl::Status Rng(const std::string& key, std::mt19937_64& rng) {
    absl::StatusOr<absl::string_view> rest = Field(key);
    if (!rest.ok()) return rest.status();
    std::istringstream is{std::string(*rest)};
    is >> rng;
    if (is.fail()) return Corrupt(key, "bad random engine state");
    std::string extra;
    if (is >> extra) return Corrupt(key, "trailing data");
    return absl::OkStatus();
  }

 private:
  std::vector<absl::string_view> lines_;
  size_t pos_ = 0;
};

#define DEXTERLAB_ASSIGN_OR_RETURN(lhs, expr) \
  auto lhs##_or = (expr);                     \
  if (!lhs##_or.ok()) return lhs##_or.status(); \
  auto lhs = *std::move(lhs##_or)

#define DEXTERLAB_RETURN_IF_ERROR(expr)       \
  do {                                        \
    absl::Status _st = (expr);                \
    if (!_st.ok()) return _st;                \
  } while (0)

template <size_t N>
absl::Status ReadArray(HeaderReader& r, const std::string& key,
                       std::array<double, N>& out) {
  DEXTERLAB_ASSIGN_OR_RETURN(v, r.Doubles(key, N));
  std::copy(v.begin(), v.end(), out.begin());
  return absl::OkStatus();
}

absl::StatusOr<Stage> ReadStage(absl::string_view name,
                                const std::string& key) {
  absl::StatusOr<Stage> stage = StageFromName(std::string(name));
  if (!stage.ok()) return Corrupt(key, stage.status().message());
  return stage;
}

absl::Status ReadSlot(HeaderReader& r, int e, EnvSlot& slot) {
  const std::string p = absl::StrCat("env.", e, ".");
  DEXTERLAB_RETURN_IF_ERROR(ReadArray(r, p + "q", slot.state.q));
  DEXTERLAB_RETURN_IF_ERROR(ReadArray(r, p + "qdot", slot.state.qdot));
  DEXTERLAB_RETURN_IF_ERROR(
      ReadArray(r, p + "activation", slot.state.activation));
  DEXTERLAB_ASSIGN_OR_RETURN(sim_time, r.Double(p + "sim_time"));
  slot.state.sim_time = sim_time;
  DEXTERLAB_ASSIGN_OR_RETURN(substeps, r.Int(p + "substeps"));
  slot.state.substeps = substeps;
  DEXTERLAB_ASSIGN_OR_RETURN(tip, r.Doubles(p + "prev_fingertip", 2));
  slot.state.prev_fingertip = {tip[0], tip[1]};
  DEXTERLAB_ASSIGN_OR_RETURN(target, r.Doubles(p + "target", 3));
  slot.target = {target[0], target[1], target[2]};
  DEXTERLAB_RETURN_IF_ERROR(
      ReadArray(r, p + "prev_action", slot.prev_action));
  DEXTERLAB_ASSIGN_OR_RETURN(first, r.Int(p + "first_step"));
  slot.first_step = first != 0;
  DEXTERLAB_ASSIGN_OR_RETURN(errors, r.Int(p + "errors"));
  slot.errors = static_cast<int>(errors);
  const std::string task_key = p + "task";
  DEXTERLAB_ASSIGN_OR_RETURN(task, r.Field(task_key));
  std::vector<absl::string_view> parts =
      absl::StrSplit(task, ' ', absl::SkipEmpty());
  if (parts.size() != 2) return Corrupt(task_key, "expected stage and sub-stage");
  DEXTERLAB_ASSIGN_OR_RETURN(stage, ReadStage(parts[0], task_key));
  slot.stage = stage;
  if (!absl::SimpleAtoi(parts[1], &slot.sub_stage)) {
    return Corrupt(task_key, "bad sub-stage");
  }
  DEXTERLAB_ASSIGN_OR_RETURN(start, r.Double(p + "attempt_start"));
  slot.attempt_start = start;
  return r.Rng(p + "rng", slot.rng);
}

}  // namespace

std::string SerializeCheckpoint(const ExperimentConfig& config,
                                const TrainingState& s) {
  std::string h;
  auto line = [&h](absl::string_view key, absl::string_view value) {
    absl::StrAppend(&h, key, " ", value, "\n");
  };
  absl::StrAppend(&h, kMagic, "\n");
  line("format_version", absl::StrCat(kCheckpointFormatVersion));
  line("config", ConfigToJson(config).dump());
  line("timestep", absl::StrCat(s.timestep));
  line("update", absl::StrCat(s.update));

  const CurriculumState& c = s.curriculum;
  line("curriculum.stage", StageName(c.stage()));
  line("curriculum.sub_stage", absl::StrCat(c.sub_stage()));
  line("curriculum.episodes_in_substage",
       absl::StrCat(c.episodes_in_substage()));
  std::string bits;
  for (bool b : c.window()) bits.push_back(b ? '1' : '0');
  line("curriculum.window", bits.empty() ? "-" : bits);

  line("sampler.ema", HexList(s.cells.ema_success));
  line("sampler.counts", absl::StrJoin(s.cells.counts, " "));
  line("learner.rng", RngText(s.learner_rng));
  line("adam.step", absl::StrCat(s.adam.step));

  line("envs", absl::StrCat(s.slots.size()));
  for (size_t e = 0; e < s.slots.size(); ++e) {
    const EnvSlot& slot = s.slots[e];
    const std::string p = absl::StrCat("env.", e, ".");
    line(p + "q", HexList(slot.state.q));
    line(p + "qdot", HexList(slot.state.qdot));
    line(p + "activation", HexList(slot.state.activation));
    line(p + "sim_time", Hex(slot.state.sim_time));
    line(p + "substeps", absl::StrCat(slot.state.substeps));
    line(p + "prev_fingertip", absl::StrCat(Hex(slot.state.prev_fingertip.x),
                                            " ",
                                            Hex(slot.state.prev_fingertip.y)));
    line(p + "target",
         absl::StrCat(Hex(slot.target.center_s), " ", Hex(slot.target.radius),
                      " ", Hex(slot.target.extrusion_depth)));
    line(p + "prev_action", HexList(slot.prev_action));
    line(p + "first_step", slot.first_step ? "1" : "0");
    line(p + "errors", absl::StrCat(slot.errors));
    line(p + "task",
         absl::StrCat(StageName(slot.stage), " ", slot.sub_stage));
    line(p + "attempt_start", Hex(slot.attempt_start));
    line(p + "rng", RngText(slot.rng));
  }

  const std::vector<NamedTensor> tensors = Tensors(s);
  for (const NamedTensor& t : tensors) {
    line("tensor", absl::StrCat(t.name, " ", t.rows, " ", t.cols));
  }
  absl::StrAppend(&h, kEndHeader, "\n");
  for (const NamedTensor& t : tensors) {
    for (int i = 0; i < t.rows * t.cols; ++i) AppendFloatLE(h, t.data[i]);
  }
  return h;
}

absl::StatusOr<Checkpoint> ParseCheckpoint(std::string_view raw) {
  const absl::string_view bytes(raw.data(), raw.size());
  const std::string end_marker = absl::StrCat("\n", kEndHeader, "\n");
  const size_t end = bytes.find(end_marker);
  if (end == absl::string_view::npos) {
    if (bytes.substr(0, sizeof(kMagic) - 1) != kMagic) {
      return absl::DataLossError("not a dexterlab checkpoint");
    }
    return absl::DataLossError(
        "checkpoint truncated: missing section 'end_header'");
  }
  std::vector<absl::string_view> lines =
      absl::StrSplit(bytes.substr(0, end), '\n');
  if (lines.empty() || lines[0] != kMagic) {
    return absl::DataLossError("not a dexterlab checkpoint");
  }
  lines.erase(lines.begin());
  HeaderReader r(std::move(lines));

  DEXTERLAB_ASSIGN_OR_RETURN(version, r.Int("format_version"));
  if (version != kCheckpointFormatVersion) {
    return absl::FailedPreconditionError(
        absl::StrCat("checkpoint format_version ", version,
                     " is not supported (expected ", kCheckpointFormatVersion,
                     ")"));
  }

  Checkpoint ck;
  {
    DEXTERLAB_ASSIGN_OR_RETURN(text, r.Field("config"));
    nlohmann::json j = nlohmann::json::parse(std::string(text), nullptr, false);
    if (j.is_discarded()) return Corrupt("config", "invalid JSON");
    absl::StatusOr<ExperimentConfig> config = ConfigFromJson(j);
    if (!config.ok()) return Corrupt("config", config.status().message());
    ck.config = *config;
  }
  const ExperimentConfig& config = ck.config;
  TrainingState& s = ck.state;

  DEXTERLAB_ASSIGN_OR_RETURN(timestep, r.Int("timestep"));
  s.timestep = timestep;
  DEXTERLAB_ASSIGN_OR_RETURN(update, r.Int("update"));
  s.update = update;

  {
    DEXTERLAB_ASSIGN_OR_RETURN(stage_name, r.Field("curriculum.stage"));
    DEXTERLAB_ASSIGN_OR_RETURN(stage, ReadStage(stage_name, "curriculum.stage"));
    DEXTERLAB_ASSIGN_OR_RETURN(sub, r.Int("curriculum.sub_stage"));
    DEXTERLAB_ASSIGN_OR_RETURN(episodes,
                               r.Int("curriculum.episodes_in_substage"));
    DEXTERLAB_ASSIGN_OR_RETURN(bits, r.Field("curriculum.window"));
    std::deque<bool> window;
    if (bits != "-") {
      for (char b : bits) {
        if (b != '0' && b != '1') {
          return Corrupt("curriculum.window", "expected 0/1 digits");
        }
        window.push_back(b == '1');
      }
    }
    absl::StatusOr<CurriculumState> curriculum = CurriculumState::Restore(
        stage, static_cast<int>(sub), episodes, window, config.curriculum);
    if (!curriculum.ok()) {
      return Corrupt("curriculum", curriculum.status().message());
    }
    s.curriculum = *curriculum;
  }

  const size_t cells = config.sampler.num_cells;
  DEXTERLAB_ASSIGN_OR_RETURN(ema, r.Doubles("sampler.ema", cells));
  DEXTERLAB_ASSIGN_OR_RETURN(counts, r.Ints("sampler.counts", cells));
  s.cells.ema_success = ema;
  s.cells.counts = counts;
  DEXTERLAB_RETURN_IF_ERROR(r.Rng("learner.rng", s.learner_rng));
  DEXTERLAB_ASSIGN_OR_RETURN(adam_step, r.Int("adam.step"));

  DEXTERLAB_ASSIGN_OR_RETURN(envs, r.Int("envs"));
  if (envs != config.rollout.num_envs) {
    return Corrupt("envs", absl::StrCat(envs, " slots but config has ",
                                        config.rollout.num_envs));
  }
  s.slots.resize(envs);
  for (int e = 0; e < envs; ++e) {
    DEXTERLAB_RETURN_IF_ERROR(ReadSlot(r, e, s.slots[e]));
  }

  s.params = PolicyParams<float>(ShapeFor(config));
  s.adam = AdamState<float>::Zeros(static_cast<int>(s.params.flat().size()));
  s.adam.step = adam_step;
  const std::vector<NamedTensor> expected = Tensors(s);
  for (const NamedTensor& t : expected) {
    DEXTERLAB_ASSIGN_OR_RETURN(desc, r.Field("tensor"));
    std::vector<absl::string_view> parts =
        absl::StrSplit(desc, ' ', absl::SkipEmpty());
    int rows = 0;
    int cols = 0;
    if (parts.size() != 3 || !absl::SimpleAtoi(parts[1], &rows) ||
        !absl::SimpleAtoi(parts[2], &cols)) {
      return Corrupt("tensor", absl::StrCat("bad descriptor '", desc, "'"));
    }
    if (parts[0] != t.name) {
      return Corrupt("tensor", absl::StrCat("expected '", t.name, "', found '",
                                            parts[0], "'"));
    }
    if (rows != t.rows || cols != t.cols) {
      return absl::FailedPreconditionError(absl::StrCat(
          "checkpoint tensor '", t.name, "' shape mismatch: stored ", rows,
          "x", cols, ", network expects ", t.rows, "x", t.cols));
    }
  }
  if (!r.AtEnd()) {
    return absl::DataLossError("checkpoint header has unexpected extra lines");
  }

  const unsigned char* data = reinterpret_cast<const unsigned char*>(
      bytes.data() + end + end_marker.size());
  size_t remaining = bytes.size() - (end + end_marker.size());
  for (const NamedTensor& t : expected) {
    const size_t need = 4 * static_cast<size_t>(t.rows) * t.cols;
    if (remaining < need) {
      return absl::DataLossError(absl::StrCat(
          "checkpoint truncated: missing data for tensor '", t.name, "'"));
    }
    float* dst = const_cast<float*>(t.data);
    for (int i = 0; i < t.rows * t.cols; ++i) dst[i] = ReadFloatLE(data + 4 * i);
    data += need;
    remaining -= need;
  }
  if (remaining != 0) {
    return absl::DataLossError("checkpoint has trailing bytes after tensors");
  }
  return ck;
}

absl::Status SaveCheckpoint(const std::string& path,
                            const ExperimentConfig& config,
                            const TrainingState& state) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", tmp));
    const std::string bytes = SerializeCheckpoint(config, state);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) return absl::UnavailableError(absl::StrCat("write failed: ", tmp));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot rename ", tmp, " to ", path, ": ", ec.message()));
  }
  return absl::OkStatus();
}

absl::StatusOr<Checkpoint> LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot read ", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  absl::StatusOr<Checkpoint> ck = ParseCheckpoint(ss.str());
  if (!ck.ok()) {
    return absl::Status(ck.status().code(),
                        absl::StrCat(path, ": ", ck.status().message()));
  }
  return ck;
}

absl::Status CheckResumeCompatible(const Checkpoint& checkpoint,
                                   const ExperimentConfig& config) {
  const NetworkShape have = checkpoint.state.params.shape();
  const NetworkShape want = ShapeFor(config);
  if (!(have == want)) {
    return absl::FailedPreconditionError(absl::StrCat(
        "checkpoint network shape mismatch: hidden ", have.hidden,
        " in checkpoint, ", want.hidden, " in config"));
  }
  if (checkpoint.config.rollout.num_envs != config.rollout.num_envs) {
    return absl::FailedPreconditionError(
        "checkpoint env count differs from config rollout.num_envs");
  }
  if (checkpoint.config.sampler.num_cells != config.sampler.num_cells) {
    return absl::FailedPreconditionError(
        "checkpoint cell count differs from config sampler.num_cells");
  }
  return absl::OkStatus();
}

}  // namespace dexterlab
