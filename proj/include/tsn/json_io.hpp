#pragma once

#include <string>
#include <vector>

#include "tsn/model.hpp"

namespace tsn {

Network network_from_json_text(const std::string& text);
std::string network_to_json_text(const Network& net);

std::vector<Flow> flows_from_json_text(const std::string& text, const Network& net);
std::string flows_to_json_text(const std::vector<Flow>& flows);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace tsn
