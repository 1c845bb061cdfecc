#include "ugrasp/sim/gridio.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ugrasp::sim {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void grid_min_max(const Grid& g, double& lo, double& hi) {
    lo = g.at_index(0);
    hi = g.at_index(0);
    for (size_t i = 1; i < g.size(); ++i) {
        lo = std::min(lo, g.at_index(i));
        hi = std::max(hi, g.at_index(i));
    }
}

}  // namespace

void write_grid_csv(const Grid& g, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    for (int r = 0; r < g.rows(); ++r) {
        for (int c = 0; c < g.cols(); ++c) {
            if (c) f << ',';
            f << fmt_double(g(r, c));
        }
        f << '\n';
    }
}

Grid read_grid_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return Grid();
    Grid g(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int r = 0; r < g.rows(); ++r) {
        if (static_cast<int>(rows[r].size()) != g.cols())
            throw std::runtime_error("ragged csv " + path);
        for (int c = 0; c < g.cols(); ++c) g(r, c) = rows[r][c];
    }
    return g;
}

void write_grid_pgm16(const Grid& g, const std::string& path) {
    double lo, hi;
    grid_min_max(g, lo, hi);
    const double span = hi - lo;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "P5\n" << g.cols() << " " << g.rows() << "\n65535\n";
    for (int r = 0; r < g.rows(); ++r) {
        for (int c = 0; c < g.cols(); ++c) {
            uint16_t v = 0;
            if (span > 0.0)
                v = static_cast<uint16_t>(std::min(65535.0, (g(r, c) - lo) / span * 65535.0 + 0.5));
            const unsigned char bytes[2] = {static_cast<unsigned char>(v >> 8),
                                            static_cast<unsigned char>(v & 0xff)};
            f.write(reinterpret_cast<const char*>(bytes), 2);
        }
    }

    std::ofstream meta(path + ".meta");
    if (!meta) throw std::runtime_error("cannot write " + path + ".meta");
    meta << "min " << fmt_double(lo) << "\nmax " << fmt_double(hi) << "\n";
}

Grid read_grid_pgm16(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    f >> magic >> w >> h >> maxval;
    if (magic != "P5" || maxval != 65535) throw std::runtime_error("bad pgm " + path);
    f.get();  // single whitespace after header

    double lo = 0.0, hi = 0.0;
    {
        std::ifstream meta(path + ".meta");
        if (!meta) throw std::runtime_error("missing sidecar for " + path);
        std::string key;
        meta >> key >> lo >> key >> hi;
    }

    Grid g(h, w);
    const double span = hi - lo;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            unsigned char bytes[2];
            f.read(reinterpret_cast<char*>(bytes), 2);
            const uint16_t v = static_cast<uint16_t>((bytes[0] << 8) | bytes[1]);
            g(r, c) = lo + (span > 0.0 ? v / 65535.0 * span : 0.0);
        }
    }
    return g;
}

void export_observation_csv(const Observation& obs, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_grid_csv(obs.height, dir + "/height.csv");
    write_grid_csv(obs.intensity, dir + "/intensity.csv");
    std::ofstream f(dir + "/normals.csv");
    if (!f) throw std::runtime_error("cannot write normals.csv");
    for (int r = 0; r < obs.normals.rows(); ++r) {
        for (int c = 0; c < obs.normals.cols(); ++c) {
            if (c) f << ',';
            f << fmt_double(obs.normals(r, c, 0)) << ',' << fmt_double(obs.normals(r, c, 1)) << ','
              << fmt_double(obs.normals(r, c, 2));
        }
        f << '\n';
    }
}

void export_observation_pgm(const Observation& obs, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_grid_pgm16(obs.height, dir + "/height.pgm");
    write_grid_pgm16(obs.intensity, dir + "/intensity.pgm");
    Grid nz(obs.normals.rows(), obs.normals.cols());
    for (int r = 0; r < nz.rows(); ++r)
        for (int c = 0; c < nz.cols(); ++c) nz(r, c) = obs.normals(r, c, 2);
    write_grid_pgm16(nz, dir + "/normal_z.pgm");
}

}  // namespace ugrasp::sim
