#pragma once

#include <string>

#include <json.hpp>

#include "slt/models.hpp"

namespace slt {

// JSON shapes shared by dataset headers and CLI config files. All field
// names mirror the type fields verbatim.
nlohmann::json dims_to_json(const ModelDims& d);
ModelDims dims_from_json(const nlohmann::json& j);
nlohmann::json kinds_to_json(const ResponseKinds& k);
ResponseKinds kinds_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const ModelSpec& s);
ModelSpec spec_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const ParamPoint& p);
ParamPoint params_from_json(const nlohmann::json& j);

// One JSON object per line: a header carrying family/dims/kinds/gamma/seed,
// then {"x": [...], "c": [...], "y": [...]} per record. Doubles round-trip
// exactly. Throws io_error on unreadable/unwritable paths and
// std::invalid_argument on malformed content.
void write_jsonl(const Dataset& d, const std::string& path);
Dataset read_jsonl(const std::string& path);

}  // namespace slt
