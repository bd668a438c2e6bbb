"""bevfuse: radar/lidar/map BEV fusion for joint object detection and
trajectory forecasting, trained and evaluated on a built-in synthetic
scene simulator."""

__version__ = "0.1.0"
