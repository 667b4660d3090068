#include "trm/montage.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <utility>

#include <json.hpp>

namespace trm {

void Montage::validate() const {
    if (grid_height <= 0 || grid_width <= 0)
        throw ValidationError("montage grid dims must be positive");
    if (channels.empty()) throw ValidationError("montage has no channels");
    if (channel_count() > grid_height * grid_width)
        throw ValidationError("montage has more channels than grid cells");
    std::set<std::string> names;
    std::set<std::pair<int, int>> cells;
    for (const auto& ch : channels) {
        if (!names.insert(ch.name).second)
            throw ValidationError("duplicate channel name '" + ch.name + "'");
        if (ch.row < 0 || ch.row >= grid_height || ch.col < 0 || ch.col >= grid_width)
            throw ValidationError("channel '" + ch.name + "' cell (" + std::to_string(ch.row) +
                                  "," + std::to_string(ch.col) + ") out of grid range");
        if (!cells.insert({ch.row, ch.col}).second)
            throw ValidationError("duplicate cell (" + std::to_string(ch.row) + "," +
                                  std::to_string(ch.col) + ")");
    }
}

Montage parse_montage(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("montage parse error: ") + e.what());
    }
    Montage m;
    try {
        m.name = doc.at("name").get<std::string>();
        m.grid_height = doc.at("grid_height").get<int>();
        m.grid_width = doc.at("grid_width").get<int>();
        for (const auto& c : doc.at("channels")) {
            Montage::Channel ch;
            ch.name = c.at("name").get<std::string>();
            ch.row = c.at("row").get<int>();
            ch.col = c.at("col").get<int>();
            m.channels.push_back(std::move(ch));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("montage document error: ") + e.what());
    }
    m.validate();
    return m;
}

Montage load_montage(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open montage file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_montage(buf.str());
}

void save_montage(const Montage& montage, const std::string& path) {
    montage.validate();
    nlohmann::json doc;
    doc["name"] = montage.name;
    doc["grid_height"] = montage.grid_height;
    doc["grid_width"] = montage.grid_width;
    doc["channels"] = nlohmann::json::array();
    for (const auto& ch : montage.channels)
        doc["channels"].push_back({{"name", ch.name}, {"row", ch.row}, {"col", ch.col}});
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write montage file '" + path + "'");
    out << doc.dump(2) << "\n";
}

Montage bind_channels(const Montage& montage, const std::vector<std::string>& signal_names) {
    if (static_cast<int>(signal_names.size()) != montage.channel_count())
        throw ValidationError("channel count mismatch: signal has " +
                              std::to_string(signal_names.size()) + ", montage has " +
                              std::to_string(montage.channel_count()));
    bool signal_named = false;
    for (const auto& n : signal_names)
        if (!n.empty()) signal_named = true;
    if (!signal_named) return montage;  // positional binding

    std::unordered_map<std::string, const Montage::Channel*> by_name;
    for (const auto& ch : montage.channels) by_name[ch.name] = &ch;
    Montage bound = montage;
    bound.channels.clear();
    for (const auto& n : signal_names) {
        auto it = by_name.find(n);
        if (it == by_name.end())
            throw ValidationError("signal channel '" + n + "' not present in montage '" +
                                  montage.name + "'");
        bound.channels.push_back(*it->second);
    }
    bound.validate();
    return bound;
}

}  // namespace trm
