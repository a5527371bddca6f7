#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

// Columnar / delimited text output with a provenance header.  All floating
// point goes through snprintf with a fixed format so repeated runs are
// byte-identical.

namespace spinbath::tabular {

enum class Format { Columnar, Delimited };

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
}

inline std::string fmt_hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

class TableWriter {
  public:
    TableWriter(const std::string& path, Format format, std::vector<std::string> columns)
        : os_(path), format_(format), columns_(std::move(columns)) {
        if (!os_) throw std::runtime_error("TableWriter: cannot open " + path);
    }

    void header(const std::string& key, const std::string& value) {
        if (body_started_) throw std::logic_error("TableWriter: header after rows");
        os_ << "# " << key << " " << value << "\n";
    }

    void header(const std::string& key, double value) { header(key, fmt_double(value)); }

    void comment(const std::string& text) {
        if (body_started_) throw std::logic_error("TableWriter: header after rows");
        os_ << "# " << text << "\n";
    }

    void row(const std::vector<double>& values) {
        if (values.size() != columns_.size())
            throw std::logic_error("TableWriter: row width mismatch");
        begin_body();
        const char* sep = format_ == Format::Delimited ? "," : " ";
        for (size_t k = 0; k < values.size(); ++k) {
            if (k) os_ << sep;
            os_ << fmt_double(values[k]);
        }
        os_ << "\n";
    }

    void text_row(const std::vector<std::string>& values) {
        if (values.size() != columns_.size())
            throw std::logic_error("TableWriter: row width mismatch");
        begin_body();
        const char* sep = format_ == Format::Delimited ? "," : " ";
        for (size_t k = 0; k < values.size(); ++k) {
            if (k) os_ << sep;
            os_ << values[k];
        }
        os_ << "\n";
    }

  private:
    void begin_body() {
        if (body_started_) return;
        body_started_ = true;
        const char* sep = format_ == Format::Delimited ? "," : " ";
        os_ << "# columns:";
        for (size_t k = 0; k < columns_.size(); ++k) os_ << (k ? sep : " ") << columns_[k];
        os_ << "\n";
    }

    std::ofstream os_;
    Format format_;
    std::vector<std::string> columns_;
    bool body_started_ = false;
};

}  // namespace spinbath::tabular
