export { CHART_KINDS, ChartKind, EmptyInputError, ResultRow, SchemaError, parseResults, readResults } from "./csv";
export { Bar, Labels, renderChart, renderSvg, toBars } from "./chart";
export { ChartSpec, main, renderSpecs } from "./cli";
