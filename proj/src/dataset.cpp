#include "vascan/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace vascan {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string frame_name(const char* prefix, size_t index) {
  std::ostringstream out;
  out << prefix << '_' << std::setw(4) << std::setfill('0') << index << ".pgm";
  return out.str();
}

std::string seq_name(size_t index) {
  std::ostringstream out;
  out << "seq_" << std::setw(4) << std::setfill('0') << index;
  return out.str();
}

}  // namespace

void validate(const SequenceRecord& record) {
  const size_t n = record.bmode.size();
  if (n == 0) throw std::invalid_argument("sequence has no frames");
  if (record.doppler.size() != n || record.gt.size() != n ||
      record.timestamps_s.size() != n || record.tilt_deg.size() != n) {
    throw std::invalid_argument("sequence channel lengths disagree");
  }
  const int h = record.bmode[0].height(), w = record.bmode[0].width();
  const float sp = record.bmode[0].spacing_mm;
  for (size_t i = 0; i < n; ++i) {
    for (const ImageGrid* g :
         {&record.bmode[i], &record.doppler[i], &record.gt[i]}) {
      if (g->height() != h || g->width() != w) {
        throw std::invalid_argument("frame dimensions disagree");
      }
      if (g->spacing_mm != sp) {
        throw std::invalid_argument("frame spacing disagrees");
      }
    }
  }
}

void save_sequence(const std::string& dir, const SequenceRecord& record) {
  validate(record);
  fs::create_directories(dir);
  json meta;
  meta["patient_id"] = record.patient_id;
  meta["sequence_id"] = record.sequence_id;
  meta["frames"] = record.frames();
  meta["height"] = record.bmode[0].height();
  meta["width"] = record.bmode[0].width();
  meta["spacing_mm"] = record.bmode[0].spacing_mm;
  meta["timestamps_s"] = record.timestamps_s;
  meta["tilt_deg"] = record.tilt_deg;
  meta["script"] = record.script;
  std::ofstream out(fs::path(dir) / "meta.json");
  if (!out) throw std::runtime_error("cannot write " + dir + "/meta.json");
  out << meta.dump(2) << '\n';
  for (size_t i = 0; i < record.frames(); ++i) {
    save_pgm((fs::path(dir) / frame_name("bmode", i)).string(),
             record.bmode[i]);
    save_pgm((fs::path(dir) / frame_name("doppler", i)).string(),
             record.doppler[i]);
    save_pgm((fs::path(dir) / frame_name("gt", i)).string(), record.gt[i]);
  }
}

SequenceRecord load_sequence(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "meta.json");
  if (!in) throw std::runtime_error("cannot read " + dir + "/meta.json");
  json meta = json::parse(in);
  SequenceRecord record;
  record.patient_id = meta.at("patient_id").get<int>();
  record.sequence_id = meta.at("sequence_id").get<int>();
  record.timestamps_s = meta.at("timestamps_s").get<std::vector<double>>();
  record.tilt_deg = meta.at("tilt_deg").get<std::vector<double>>();
  record.script = meta.value("script", std::string());
  const size_t n = meta.at("frames").get<size_t>();
  const float sp = meta.at("spacing_mm").get<float>();
  for (size_t i = 0; i < n; ++i) {
    record.bmode.push_back(
        load_pgm((fs::path(dir) / frame_name("bmode", i)).string(), sp));
    record.doppler.push_back(
        load_pgm((fs::path(dir) / frame_name("doppler", i)).string(), sp));
    record.gt.push_back(
        load_pgm((fs::path(dir) / frame_name("gt", i)).string(), sp));
  }
  validate(record);
  return record;
}

void save_dataset(const std::string& dir, const Dataset& data) {
  fs::create_directories(dir);
  for (size_t i = 0; i < data.sequences.size(); ++i) {
    save_sequence((fs::path(dir) / seq_name(i)).string(), data.sequences[i]);
  }
}

Dataset load_dataset(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("dataset directory not found: " + dir);
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() &&
        entry.path().filename().string().rfind("seq_", 0) == 0) {
      names.push_back(entry.path().string());
    }
  }
  std::sort(names.begin(), names.end());
  Dataset data;
  for (const std::string& name : names) {
    data.sequences.push_back(load_sequence(name));
  }
  if (data.sequences.empty()) {
    throw std::runtime_error("no sequences under " + dir);
  }
  return data;
}

std::vector<int> patient_ids(const Dataset& data) {
  std::vector<int> ids;
  for (const SequenceRecord& s : data.sequences) ids.push_back(s.patient_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::pair<Dataset, Dataset> loocv_split(const Dataset& data, int fold) {
  const std::vector<int> ids = patient_ids(data);
  if (ids.size() < 2) {
    throw std::invalid_argument("leave-one-out needs at least two patients");
  }
  if (fold < 0 || fold >= static_cast<int>(ids.size())) {
    throw std::invalid_argument("fold index out of range");
  }
  const int held_out = ids[fold];
  Dataset train, val;
  for (const SequenceRecord& s : data.sequences) {
    (s.patient_id == held_out ? val : train).sequences.push_back(s);
  }
  return {std::move(train), std::move(val)};
}

}  // namespace vascan
