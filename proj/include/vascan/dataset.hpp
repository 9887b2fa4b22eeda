#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vascan/imaging.hpp"

namespace vascan {

// One recorded sweep: aligned bmode/doppler/ground-truth frames plus the
// acquisition metadata needed to replay or regroup it.
struct SequenceRecord {
  int patient_id = 0;
  int sequence_id = 0;
  std::vector<ImageGrid> bmode;
  std::vector<ImageGrid> doppler;
  std::vector<ImageGrid> gt;
  std::vector<double> timestamps_s;
  std::vector<double> tilt_deg;
  std::string script;  // free-form provenance, e.g. the dropout-zone script

  size_t frames() const { return bmode.size(); }
};

struct Dataset {
  std::vector<SequenceRecord> sequences;
};

// Throws std::invalid_argument on ragged channels, empty sequences, or
// frames whose dimensions or spacing disagree.
void validate(const SequenceRecord& record);

// A sequence persists as a directory: meta.json plus bmode_NNNN.pgm,
// doppler_NNNN.pgm, gt_NNNN.pgm per frame. Masks round-trip bit-exactly.
void save_sequence(const std::string& dir, const SequenceRecord& record);
SequenceRecord load_sequence(const std::string& dir);

// A dataset is a directory of seq_NNNN subdirectories.
void save_dataset(const std::string& dir, const Dataset& data);
Dataset load_dataset(const std::string& dir);

// Sorted unique patient ids.
std::vector<int> patient_ids(const Dataset& data);

// Leave-one-patient-out: validation is patient number `fold` of the sorted
// id list, training is everyone else. Throws unless 0 <= fold < patients
// and at least two patients exist.
std::pair<Dataset, Dataset> loocv_split(const Dataset& data, int fold);

}  // namespace vascan
