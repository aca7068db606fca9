# phasekit documentation build configuration file.
import sphinx_rtd_theme

extensions = [
    'myst_parser',
    'sphinx.ext.autosummary',
    'sphinx.ext.autodoc',
    'sphinx.ext.viewcode',
    'numpydoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable', None),
    'scipy': ('https://docs.scipy.org/doc/scipy', None),
}

numpydoc_show_class_members = False

templates_path = ['_templates']
source_suffix = [".rst", ".md"]
master_doc = 'index'

project = 'phasekit'
copyright = '2026, phasekit developers'
author = 'phasekit developers'

import phasekit
version = release = phasekit.__version__

language = "en"
exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'sphinx_rtd_theme'
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
htmlhelp_basename = 'phasekitdoc'
