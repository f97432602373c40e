#pragma once

#include <span>
#include <string>
#include <vector>

#include "thermoseer/errors.hpp"
#include "thermoseer/mapping.hpp"
#include "thermoseer/pipeline.hpp"
#include "thermoseer/types.hpp"

namespace thermoseer {

inline constexpr int kDatasetVersion = 1;
inline constexpr int kCheckpointVersion = 1;

/// 17 significant digits, enough for an exact round trip.
std::string format_double(double v);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path, ErrorKind kind = ErrorKind::Data);

/// JSON Lines: a header record followed by one record per profile.
std::string dataset_to_jsonl(const WallDataset& dataset);
WallDataset dataset_from_jsonl(const std::string& text, const std::string& origin = "<dataset>");
void save_dataset(const std::string& path, const WallDataset& dataset);
WallDataset load_dataset(const std::string& path);

std::string checkpoint_to_json(const MappingModel& model);
MappingModel checkpoint_from_json(const std::string& text, const std::string& origin = "<checkpoint>");
void save_checkpoint(const std::string& path, const MappingModel& model);
MappingModel load_checkpoint(const std::string& path);

std::string eval_report_json(const EvalReport& report);
/// Columns layer,point,reop.
std::string eval_report_csv(const EvalReport& report);
std::string timing_json(std::span<const LayerTiming> timing);
/// Columns epoch,loss,lr.
std::string loss_csv(std::span<const double> loss, std::span<const double> lr);
/// Columns local_time_s,position_mm,temp_c,extrapolated.
std::string field_csv(std::span<const FieldFrame> frames);

}  // namespace thermoseer
