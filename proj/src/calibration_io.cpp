#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "srs/errors.hpp"
#include "srs/scoring.hpp"

namespace srs::score {
namespace {

std::string num(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

double parse_double(const std::string& key, std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError("calibration: bad number for '" + key + "': '" + std::string(s) + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError("calibration: bad integer for '" + key + "': '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

std::string digest_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_calibration(const SrCalibration& cal) {
    std::string out;
    auto kv = [&](std::string_view k, const std::string& v) {
        out.append(k);
        out.push_back('=');
        out += v;
        out.push_back('\n');
    };
    kv("format", "srs-calibration-1");
    kv("mode", std::string(mode_name(cal.mode)));
    kv("score_form", std::string(score_form_name(cal.form)));
    kv("mu_sr", num(cal.mean));
    kv("sigma_sr", num(cal.sigma));
    kv("median_sr", num(cal.median));
    kv("lambda", num(cal.lambda));
    kv("tau_l", num(cal.lower));
    kv("tau_u", num(cal.upper));
    kv("samples", std::to_string(cal.samples));
    kv("seed", std::to_string(cal.seed));
    kv("align_inputs", cal.align_inputs ? "1" : "0");
    kv("model_x_hash", cal.model_x_hash);
    kv("model_r_hash", cal.model_r_hash);
    std::string scores;
    for (std::size_t i = 0; i < cal.train_scores.size(); ++i) {
        if (i) scores.push_back(' ');
        scores += num(cal.train_scores[i]);
    }
    kv("train_scores", scores);
    return out;
}

SrCalibration parse_calibration(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("calibration line " + std::to_string(line_no) + ": missing '='");
        kv[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
    }
    auto need = [&](const std::string& k) -> const std::string& {
        auto it = kv.find(k);
        if (it == kv.end()) throw ParseError("calibration: missing key '" + k + "'");
        return it->second;
    };
    if (need("format") != "srs-calibration-1") throw ParseError("calibration: unsupported format '" + kv["format"] + "'");
    SrCalibration cal;
    cal.mode = parse_mode(need("mode"));
    cal.form = parse_score_form(need("score_form"));
    cal.mean = parse_double("mu_sr", need("mu_sr"));
    cal.sigma = parse_double("sigma_sr", need("sigma_sr"));
    cal.median = parse_double("median_sr", need("median_sr"));
    cal.lambda = parse_double("lambda", need("lambda"));
    cal.lower = parse_double("tau_l", need("tau_l"));
    cal.upper = parse_double("tau_u", need("tau_u"));
    cal.samples = parse_u64("samples", need("samples"));
    cal.seed = parse_u64("seed", need("seed"));
    cal.align_inputs = need("align_inputs") == "1";
    cal.model_x_hash = need("model_x_hash");
    cal.model_r_hash = need("model_r_hash");
    std::string_view scores = need("train_scores");
    std::size_t i = 0;
    while (i < scores.size()) {
        while (i < scores.size() && scores[i] == ' ') ++i;
        std::size_t j = i;
        while (j < scores.size() && scores[j] != ' ') ++j;
        if (j > i) cal.train_scores.push_back(parse_double("train_scores", scores.substr(i, j - i)));
        i = j;
    }
    if (cal.lower > cal.upper) throw ValidationError("calibration: tau_l > tau_u");
    return cal;
}

void save_calibration(const SrCalibration& cal, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write calibration '" + path.string() + "'");
    out << format_calibration(cal);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

SrCalibration load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open calibration '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_calibration(buf.str());
}

}  // namespace srs::score
