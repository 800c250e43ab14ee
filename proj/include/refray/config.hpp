#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace refray {

// Flat key = value settings merged from a config file and command-line
// overrides (flags win). Unknown keys are rejected so typos never pass
// silently.
class RunConfig {
public:
    static const std::set<std::string>& known_keys() {
        static const std::set<std::string> keys = {
            // shared
            "threads", "seed",
            // training
            "iterations", "batch_rays", "samples", "lr", "mode", "ior", "t_near", "t_far", "jitter", "log_every",
            // field
            "field", "grid_res", "mlp_depth", "mlp_width", "mlp_l_pos", "mlp_l_dir",
            // visual hull
            "K", "smooth_radius", "isolevel", "laplacian_lambda", "laplacian_iters", "bbox",
            // synthetic scenes
            "solid", "views", "width", "height", "focal", "distance", "azimuth_min", "azimuth_max", "elevations",
            "rig", "cell", "supersample", "background",
        };
        return keys;
    }

    void set(const std::string& key, const std::string& value) {
        if (!known_keys().count(key)) throw std::runtime_error("config: unknown key '" + key + "'");
        values_[key] = value;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                if (trim(line).empty()) continue;
                throw std::runtime_error(path + " line " + std::to_string(line_no) + ": expected key = value");
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty() || value.empty())
                throw std::runtime_error(path + " line " + std::to_string(line_no) + ": empty key or value");
            if (!known_keys().count(key))
                throw std::runtime_error(path + " line " + std::to_string(line_no) + ": unknown key '" + key + "'");
            values_[key] = value;
        }
    }

    std::string get_str(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw std::runtime_error("config: key '" + key + "' is not a number: " + it->second);
        }
    }

    long long get_int(const std::string& key, long long fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            size_t pos = 0;
            const long long v = std::stoll(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw std::runtime_error("config: key '" + key + "' is not an integer: " + it->second);
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1" || it->second == "on") return true;
        if (it->second == "false" || it->second == "0" || it->second == "off") return false;
        throw std::runtime_error("config: key '" + key + "' is not a boolean: " + it->second);
    }

    // Comma-separated doubles, e.g. elevations or bbox corners.
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string token;
        while (std::getline(ss, token, ',')) {
            token = trim(token);
            if (token.empty()) continue;
            try {
                out.push_back(std::stod(token));
            } catch (...) {
                throw std::runtime_error("config: key '" + key + "' has a bad number: " + token);
            }
        }
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        const auto begin = s.find_first_not_of(" \t\r\n");
        if (begin == std::string::npos) return "";
        const auto end = s.find_last_not_of(" \t\r\n");
        return s.substr(begin, end - begin + 1);
    }

    std::map<std::string, std::string> values_;
};

}  // namespace refray
