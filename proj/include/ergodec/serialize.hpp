#pragma once

#include <string>
#include <vector>

namespace ergodec {

// Canonical text form of a double: 17 significant digits, round-trippable.
std::string format_real(double v);

// RFC 4180 field quoting (applied only when the field needs it).
std::string csv_escape(const std::string& field);

// Row-oriented CSV builder with CRLF line endings.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    void row(const std::vector<std::string>& cells);
    const std::string& str() const { return out_; }
    std::size_t rows() const { return rows_; }

private:
    void emit(const std::vector<std::string>& cells);

    std::string out_;
    std::size_t columns_ = 0;
    std::size_t rows_ = 0;
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace ergodec
