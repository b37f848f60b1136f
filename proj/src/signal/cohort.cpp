// SPDX-License-Identifier: Apache-2.0
#include "cfspm/signal/cohort.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <map>

#include <json.hpp>

#include "cfspm/error.hpp"
#include "cfspm/signal/container.hpp"

namespace cfspm::signal {

std::size_t Cohort::num_samples() const {
  return subjects.empty() ? 0 : subjects.front().trials.dim(2);
}

std::size_t Cohort::num_classes() const {
  std::int64_t k = 0;
  for (const auto& s : subjects) {
    for (auto y : s.labels) k = std::max(k, y);
  }
  return static_cast<std::size_t>(k);
}

std::size_t Cohort::subject_index(const std::string& id) const {
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (subjects[i].id == id) return i;
  }
  throw ValidationError("unknown subject '" + id + "'");
}

void validate(const Cohort& c) {
  if (c.channels.size() < 2) throw ValidationError("cohort needs at least two channels");
  if (c.subjects.empty()) throw ValidationError("cohort has no subjects");
  const std::size_t ch = c.channels.size();
  for (const auto* g : {&c.groups.left, &c.groups.right}) {
    for (std::size_t i : *g) {
      if (i >= ch) throw ValidationError(fmt::format("channel group index {} out of range", i));
    }
  }
  const std::size_t t = c.num_samples();
  for (const auto& s : c.subjects) {
    const auto& shape = s.trials.shape();
    if (shape.size() != 3 || shape[0] != s.labels.size() || shape[1] != ch || shape[2] != t) {
      throw ShapeError(fmt::format(
          "subject {}: trials {} disagree with manifest ({} labels, {} channels, {} samples)", s.id,
          shape_str(shape), s.labels.size(), ch, t));
    }
    for (auto y : s.labels) {
      if (y < 1) throw ValidationError(fmt::format("subject {}: label {} outside 1..K", s.id, y));
    }
  }
}

Tensor trial_at(const Tensor& stack, std::size_t i) {
  const std::size_t c = stack.dim(1), t = stack.dim(2);
  if (i >= stack.dim(0)) throw ShapeError("trial index out of range");
  const auto src = stack.data().subspan(i * c * t, c * t);
  return Tensor({c, t}, std::vector<double>(src.begin(), src.end()));
}

Cohort assemble_cohort(const std::vector<Trial>& trials, std::vector<std::string> channels,
                       ChannelGroups groups) {
  if (trials.empty()) throw ValidationError("no trials to assemble");
  Cohort cohort;
  cohort.fs = trials.front().fs;
  cohort.channels = std::move(channels);
  cohort.groups = std::move(groups);
  const std::size_t c = trials.front().samples.dim(0), t = trials.front().samples.dim(1);
  std::vector<std::string> order;
  std::map<std::string, std::vector<const Trial*>> by_subject;
  for (const auto& tr : trials) {
    if (tr.samples.shape() != Shape{c, t}) throw ShapeError("trials differ in shape");
    if (!by_subject.contains(tr.subject)) order.push_back(tr.subject);
    by_subject[tr.subject].push_back(&tr);
  }
  for (const auto& id : order) {
    const auto& list = by_subject[id];
    std::vector<double> data;
    data.reserve(list.size() * c * t);
    SubjectData s{id, {}, {}};
    for (const Trial* tr : list) {
      data.insert(data.end(), tr->samples.data().begin(), tr->samples.data().end());
      s.labels.push_back(tr->label);
    }
    s.trials = Tensor({list.size(), c, t}, std::move(data));
    cohort.subjects.push_back(std::move(s));
  }
  validate(cohort);
  return cohort;
}

void write_cohort(const std::filesystem::path& dir, const Cohort& cohort) {
  validate(cohort);
  std::filesystem::create_directories(dir);
  nlohmann::json subjects = nlohmann::json::array();
  for (const auto& s : cohort.subjects) {
    const std::string trials = s.id + "_trials.cfsp";
    const std::string labels = s.id + "_labels.cfsp";
    write_container(dir / trials, from_tensor(s.trials, DType::kF64));
    write_container(dir / labels, from_labels(s.labels));
    subjects.push_back({{"id", s.id}, {"trials", trials}, {"labels", labels}});
  }
  nlohmann::json manifest = {
      {"fs", static_cast<int>(std::lround(cohort.fs))},
      {"channels", cohort.channels},
      {"groups", {{"left", cohort.groups.left}, {"right", cohort.groups.right}}},
      {"subjects", subjects}};
  std::ofstream os(dir / "manifest.json");
  if (!os) throw IoError("cannot write " + (dir / "manifest.json").string());
  os << manifest.dump(2) << '\n';
}

Cohort read_cohort(const std::filesystem::path& path) {
  const auto manifest_path =
      std::filesystem::is_directory(path) ? path / "manifest.json" : path;
  std::ifstream is(manifest_path);
  if (!is) throw IoError("cannot open cohort manifest " + manifest_path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }
  const auto base = manifest_path.parent_path();
  Cohort cohort;
  try {
    cohort.fs = j.at("fs").get<double>();
    cohort.channels = j.at("channels").get<std::vector<std::string>>();
    cohort.groups.left = j.at("groups").at("left").get<std::vector<std::size_t>>();
    cohort.groups.right = j.at("groups").at("right").get<std::vector<std::size_t>>();
    for (const auto& s : j.at("subjects")) {
      SubjectData sd;
      sd.id = s.at("id").get<std::string>();
      std::filesystem::path tp = s.at("trials").get<std::string>();
      std::filesystem::path lp = s.at("labels").get<std::string>();
      if (tp.is_relative()) tp = base / tp;
      if (lp.is_relative()) lp = base / lp;
      sd.trials = to_tensor(read_container(tp));
      sd.labels = to_labels(read_container(lp));
      cohort.subjects.push_back(std::move(sd));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }
  validate(cohort);
  return cohort;
}

}  // namespace cfspm::signal
